"""End-to-end demonstration: synth -> train (five losses) -> score -> audit.

Produces a small systems-by-losses grid of the three fairness metrics for a
single toy linear encoder, plus per-loss held-out EER. Loss-function
rankings at this scale are illustrative only; per-loss bias orderings are an
empirical property of full-scale systems, not something the toy pipeline is
expected to reproduce.
"""

from __future__ import annotations

from dataclasses import dataclass

from .fairness import audit
from .ingest import EmbeddingTable
from .losses import AAM_SOFTMAX, AM_SOFTMAX, LOSS_KINDS, PROTOTYPICAL, SOFTMAX, TRIPLET
from .model import Attribute, Gender, GroupScheme, SchemeKind
from .report import ExperimentGrid
from .scoring import score_trials
from .synth import Cohort, SynthConfig, gen_cohort, gen_trials
from .thresholding import compute_eer
from .training import LossConfig, dataset_from_cohort, export_embeddings, train_toy

SYSTEM_TAG = "toy-linear"

#: Per-loss optimizer settings for the demo cohort. The margin losses get a
#: smaller step because the scaled-cosine logits amplify gradients; the
#: triplet demo uses a nonzero margin since the zero-margin objective is
#: trivially minimizable by collapsing the embedding scale.
DEMO_HYPERS: dict[str, dict] = {
    SOFTMAX: {"lr": 0.5, "epochs": 25, "config": LossConfig(SOFTMAX, batch_speakers=32)},
    AM_SOFTMAX: {
        "lr": 0.02,
        "epochs": 25,
        "config": LossConfig(AM_SOFTMAX, margin=0.2, scale=30.0, batch_speakers=32),
    },
    AAM_SOFTMAX: {
        "lr": 0.02,
        "epochs": 25,
        "config": LossConfig(AAM_SOFTMAX, margin=0.2, scale=30.0, batch_speakers=32),
    },
    TRIPLET: {
        "lr": 0.05,
        "epochs": 25,
        "config": LossConfig(TRIPLET, triplet_margin=0.3, batch_speakers=32),
    },
    PROTOTYPICAL: {
        "lr": 0.02,
        "epochs": 25,
        "config": LossConfig(PROTOTYPICAL, support_size=3, batch_speakers=8),
    },
}

DEMO_SYNTH = SynthConfig(
    n_speakers=50,
    utterances_per_speaker=20,
    input_dim=24,
    protected_fraction=0.5,
    bias=0.5,
    base_separation=1.0,
    noise_sigma=0.25,
)


@dataclass
class DemoLossResult:
    loss_kind: str
    eer: float
    threshold: float
    statistical_parity: float
    equalized_odds: float
    equal_opportunity: float
    first_epoch_loss: float
    final_epoch_loss: float


@dataclass
class DemoResult:
    grid: ExperimentGrid
    per_loss: list[DemoLossResult]


def _split_utterances(cohort: Cohort, eval_per_speaker: int) -> tuple[list[str], list[str]]:
    by_speaker: dict[str, list[str]] = {}
    for utt in sorted(cohort.features.entries):
        by_speaker.setdefault(utt.split("/", 1)[0], []).append(utt)
    train, eval_ = [], []
    for utts in by_speaker.values():
        train.extend(utts[:-eval_per_speaker])
        eval_.extend(utts[-eval_per_speaker:])
    return train, eval_


def run_demo(
    seed: int = 0,
    embedding_dim: int = 16,
    eval_per_speaker: int = 5,
    n_target: int = 5000,
    n_nontarget: int = 5000,
    threads: int = 1,
) -> DemoResult:
    """Train all five losses on one synthetic cohort and audit each system."""
    synth_config = SynthConfig(
        n_speakers=DEMO_SYNTH.n_speakers,
        utterances_per_speaker=DEMO_SYNTH.utterances_per_speaker,
        input_dim=DEMO_SYNTH.input_dim,
        protected_fraction=DEMO_SYNTH.protected_fraction,
        bias=DEMO_SYNTH.bias,
        base_separation=DEMO_SYNTH.base_separation,
        noise_sigma=DEMO_SYNTH.noise_sigma,
        seed=seed,
    )
    cohort = gen_cohort(synth_config)
    train_utts, eval_utts = _split_utterances(cohort, eval_per_speaker)

    eval_cohort = Cohort(
        cohort.metadata,
        EmbeddingTable(
            cohort.features.dim,
            {u: cohort.features.entries[u] for u in eval_utts},
        ),
    )
    trials = gen_trials(eval_cohort, n_target, n_nontarget, seed=seed + 1)
    dataset = dataset_from_cohort(cohort, train_utts)
    scheme = GroupScheme(SchemeKind.BINARY, Attribute.GENDER, Gender.FEMALE.value)

    per_loss: list[DemoLossResult] = []
    cells: dict[tuple[str, str], tuple[float, float, float]] = {}
    for offset, loss_kind in enumerate(LOSS_KINDS):
        hypers = DEMO_HYPERS[loss_kind]
        result = train_toy(
            dataset,
            hypers["config"],
            epochs=hypers["epochs"],
            learning_rate=hypers["lr"],
            seed=seed + 100 + offset,
            embedding_dim=embedding_dim,
        )
        table = export_embeddings(result.params, cohort.features, eval_utts)
        scored = score_trials(trials, table, threads=threads)
        eer = compute_eer(scored)
        report = audit(scored, cohort.metadata, scheme, threshold=eer.threshold)

        per_loss.append(
            DemoLossResult(
                loss_kind=loss_kind,
                eer=eer.eer,
                threshold=eer.threshold,
                statistical_parity=report.statistical_parity,
                equalized_odds=report.equalized_odds,
                equal_opportunity=report.equal_opportunity,
                first_epoch_loss=result.history[0],
                final_epoch_loss=result.history[-1],
            )
        )
        cells[(SYSTEM_TAG, loss_kind)] = (
            report.statistical_parity,
            report.equalized_odds,
            report.equal_opportunity,
        )

    grid = ExperimentGrid(rows=[SYSTEM_TAG], columns=list(LOSS_KINDS), cells=cells)
    return DemoResult(grid, per_loss)
