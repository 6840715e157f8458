"""Command-line interface.

Subcommands: score, eer, audit, sweep, synth, trainlab, demo. Results go to
stdout (or --out files, written atomically); diagnostics go to stderr. Exit
codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import tempfile
from pathlib import Path

from .demo import run_demo
from .errors import InvalidScheme, SvauditError
from .fairness import EER_ON_ALL_TRIALS, audit, nationality_sweep
from .ingest import (
    SIMILARITY,
    load_embeddings,
    load_metadata,
    load_scores,
    load_trials,
    parse_utt_map,
    write_embeddings,
    write_metadata,
    write_scores,
    write_trials,
)
from .losses import LOSS_KINDS
from .model import (
    AssignmentPolicy,
    Attribute,
    GroupScheme,
    SchemeKind,
    default_utt_to_speaker,
)
from .report import (
    render_fairness_report,
    render_grid,
    render_nationality_series,
)
from .scoring import score_trials
from .synth import SynthConfig, gen_cohort, gen_trials
from .thresholding import compute_eer
from .training import LossConfig, dataset_from_cohort, export_embeddings, train_toy


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _write_atomic(path: str | Path, text: str) -> None:
    """Stage output in a temp file and move it into place on success."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, out: str | None) -> None:
    if out:
        _write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _parse_scheme(spec: str, policy: str) -> GroupScheme:
    attribute, sep, value = spec.partition(":")
    if not sep or not value:
        raise UsageError(
            f"--scheme must look like attribute:protected_value (e.g. gender:female), got {spec!r}"
        )
    try:
        attr = Attribute(attribute)
    except ValueError:
        raise UsageError(
            f"--scheme attribute must be gender or nationality, got {attribute!r}"
        ) from None
    kind = SchemeKind.BINARY if attr is Attribute.GENDER else SchemeKind.ONE_VS_REST
    pol = (
        AssignmentPolicy.BY_ENROLLMENT_SPEAKER
        if policy == "enrollment"
        else AssignmentPolicy.BOTH_SPEAKERS_REQUIRED
    )
    value = value.lower() if attr is Attribute.GENDER else value.upper()
    try:
        return GroupScheme(kind, attr, value, pol)
    except InvalidScheme as exc:
        raise UsageError(f"--scheme: {exc}") from None


def _parse_threshold(text: str):
    if text == EER_ON_ALL_TRIALS:
        return EER_ON_ALL_TRIALS
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"--threshold must be 'eer' or a number, got {text!r}") from None


def _resolver(args):
    if getattr(args, "utt_map", None):
        with open(args.utt_map, encoding="utf-8") as fh:
            mapping = parse_utt_map(fh)

        def resolve(utt: str) -> str:
            return mapping.get(utt, default_utt_to_speaker(utt))

        return resolve
    return default_utt_to_speaker


def _load_scored(args):
    trials = load_trials(args.trials) if getattr(args, "trials", None) else None
    return load_scores(args.scores, polarity=args.polarity, trials=trials)


def _cmd_score(args) -> int:
    trials = load_trials(args.trials)
    table = load_embeddings(args.embeddings)
    scored = score_trials(trials, table, threads=args.threads)
    buf = io.StringIO()
    write_scores(scored, buf)
    _emit(buf.getvalue(), args.out)
    return 0


def _cmd_eer(args) -> int:
    scored = _load_scored(args)
    result = compute_eer(scored)
    if result.degenerate:
        sys.stderr.write("warning: all scores are equal; EER is only nominally defined\n")
    _emit(f"eer={result.eer:.6f} threshold={result.threshold:.6f}\n", args.out)
    return 0


def _cmd_audit(args) -> int:
    scheme = _parse_scheme(args.scheme, args.assign)
    scored = _load_scored(args)
    cohort = load_metadata(args.metadata)
    report = audit(
        scored,
        cohort,
        scheme,
        threshold=_parse_threshold(args.threshold),
        eo_aggregation=args.eo_aggregation,
        utt_to_speaker=_resolver(args),
        mark_inestimable=args.mark_inestimable,
    )
    _emit(render_fairness_report(report, args.format), args.out)
    return 0


def _cmd_sweep(args) -> int:
    scored = _load_scored(args)
    cohort = load_metadata(args.metadata)
    policy = (
        AssignmentPolicy.BY_ENROLLMENT_SPEAKER
        if args.assign == "enrollment"
        else AssignmentPolicy.BOTH_SPEAKERS_REQUIRED
    )
    entries = nationality_sweep(
        scored,
        cohort,
        policy,
        threshold=_parse_threshold(args.threshold),
        eo_aggregation=args.eo_aggregation,
        utt_to_speaker=_resolver(args),
    )
    _emit(render_nationality_series(entries, args.format), args.out)
    return 0


def _parse_palette(text: str | None):
    if not text:
        return None
    palette = []
    for item in text.split(","):
        code, sep, weight = item.partition(":")
        if not sep:
            raise UsageError(
                f"--nationalities items must look like CODE:WEIGHT, got {item!r}"
            )
        try:
            palette.append((code.strip(), float(weight)))
        except ValueError:
            raise UsageError(f"--nationalities weight is not a number in {item!r}") from None
    return tuple(palette)


def _cmd_synth(args) -> int:
    config = SynthConfig(
        n_speakers=args.speakers,
        utterances_per_speaker=args.utts_per_speaker,
        input_dim=args.dim,
        protected_fraction=args.protected_fraction,
        bias=args.bias,
        base_separation=args.base_separation,
        noise_sigma=args.noise_sigma,
        nationality_palette=_parse_palette(args.nationalities),
        seed=args.seed,
    )
    cohort = gen_cohort(config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    buf = io.StringIO()
    write_metadata(cohort.metadata, buf)
    _write_atomic(out_dir / "metadata.csv", buf.getvalue())

    buf = io.StringIO()
    write_embeddings(cohort.features, buf)
    _write_atomic(out_dir / "features.txt", buf.getvalue())

    if args.n_target or args.n_nontarget:
        trials = gen_trials(
            cohort,
            args.n_target,
            args.n_nontarget,
            same_group_only=args.same_group_only,
            seed=args.trial_seed if args.trial_seed is not None else args.seed + 1,
        )
        buf = io.StringIO()
        write_trials(trials, buf)
        _write_atomic(out_dir / "trials.txt", buf.getvalue())

    sys.stderr.write(f"wrote cohort ({config.n_speakers} speakers) to {out_dir}\n")
    return 0


def _cmd_trainlab(args) -> int:
    from .synth import Cohort

    metadata = load_metadata(args.metadata)
    features = load_embeddings(args.features)
    cohort = Cohort(metadata, features)
    dataset = dataset_from_cohort(cohort)
    config = LossConfig(
        loss_kind=args.loss,
        margin=args.margin,
        scale=args.scale,
        triplet_margin=args.triplet_margin,
        support_size=args.support_size,
        batch_speakers=args.batch,
    )
    result = train_toy(
        dataset,
        config,
        epochs=args.epochs,
        learning_rate=args.lr,
        seed=args.seed,
        embedding_dim=args.embedding_dim,
    )
    table = export_embeddings(result.params, features)
    buf = io.StringIO()
    write_embeddings(table, buf)
    _emit(buf.getvalue(), args.out)
    if args.history:
        _write_atomic(args.history, json.dumps(result.history) + "\n")
    sys.stderr.write(
        f"trained {args.loss}: epoch losses {result.history[0]:.4f} -> {result.history[-1]:.4f}\n"
    )
    return 0


def _cmd_demo(args) -> int:
    result = run_demo(seed=args.seed, threads=args.threads)
    for entry in result.per_loss:
        sys.stderr.write(
            f"loss={entry.loss_kind} eer={entry.eer:.4f} threshold={entry.threshold:.4f} "
            f"train_loss={entry.first_epoch_loss:.4f}->{entry.final_epoch_loss:.4f}\n"
        )
    _emit(render_grid(result.grid, args.format), args.out)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="svaudit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_polarity(p):
        p.add_argument(
            "--polarity",
            choices=[SIMILARITY, "distance"],
            default=SIMILARITY,
            help="whether higher score means same-speaker (similarity) or different (distance)",
        )

    p = sub.add_parser("score", help="score trials from an embedding table")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--trials", required=True)
    p.add_argument("--out")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("eer", help="equal error rate and its threshold")
    p.add_argument("--scores", required=True)
    p.add_argument("--trials")
    add_polarity(p)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_eer)

    p = sub.add_parser("audit", help="fairness audit under a group scheme")
    p.add_argument("--scores", required=True)
    p.add_argument("--metadata", required=True)
    p.add_argument("--trials")
    p.add_argument("--scheme", required=True, help="attribute:protected_value, e.g. gender:female")
    p.add_argument("--assign", choices=["enrollment", "both"], default="enrollment")
    p.add_argument("--threshold", default=EER_ON_ALL_TRIALS)
    p.add_argument("--eo-aggregation", choices=["mean", "max"], default="mean")
    p.add_argument("--mark-inestimable", action="store_true")
    p.add_argument("--utt-map")
    add_polarity(p)
    p.add_argument("--format", choices=["json", "markdown"], default="json")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_audit)

    p = sub.add_parser("sweep", help="one-vs-rest audit per nationality")
    p.add_argument("--scores", required=True)
    p.add_argument("--metadata", required=True)
    p.add_argument("--trials")
    p.add_argument("--assign", choices=["enrollment", "both"], default="enrollment")
    p.add_argument("--threshold", default=EER_ON_ALL_TRIALS)
    p.add_argument("--eo-aggregation", choices=["mean", "max"], default="mean")
    p.add_argument("--utt-map")
    add_polarity(p)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("synth", help="generate a synthetic cohort on disk")
    p.add_argument("--speakers", type=int, default=40)
    p.add_argument("--utts-per-speaker", type=int, default=40)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--protected-fraction", type=float, default=0.5)
    p.add_argument("--bias", type=float, default=0.0)
    p.add_argument("--base-separation", type=float, default=1.0)
    p.add_argument("--noise-sigma", type=float, default=0.5)
    p.add_argument("--nationalities", help="palette like US:5,UK:3,NZ:1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-target", type=int, default=10000)
    p.add_argument("--n-nontarget", type=int, default=10000)
    p.add_argument("--same-group-only", action="store_true")
    p.add_argument("--trial-seed", type=int)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("trainlab", help="train the toy encoder and export embeddings")
    p.add_argument("--metadata", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--loss", choices=list(LOSS_KINDS), required=True)
    p.add_argument("--margin", type=float, default=0.2)
    p.add_argument("--scale", type=float, default=30.0)
    p.add_argument("--triplet-margin", type=float, default=0.0)
    p.add_argument("--support-size", type=int, default=3)
    p.add_argument("--batch", type=int, default=16)
    p.add_argument("--epochs", type=int, default=25)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--embedding-dim", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--history")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_trainlab)

    p = sub.add_parser("demo", help="synth, train all five losses, audit, render grid")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--format", choices=["markdown", "csv", "json"], default="markdown")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except SvauditError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
