"""End-to-end orchestration: experience text -> initial translation ->
critic-tree refinement -> grounding -> rule compilation -> utility
training -> evaluation, with literal and supply grounding prompt modes
and a reproducibility manifest.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from . import compiler, ltl, metrics, scenarios, trainer
from .critic_tree import CriticTree, CriticTreeConfig
from .gateway import Backend, BackendSpec, ChatMessage, CriticEnsembleSpec, make_backend
from .knowledge import KnowledgeBase
from .trainer import TrainConfig

LITERAL = "literal"
SUPPLY = "supply"

GROUNDING_TEMPLATES = {
    LITERAL: (
        "Rewrite this temporal logic formula using only atoms from the "
        "vocabulary, strictly preserving the conditions stated: {formula}\n"
        "Vocabulary: {atoms}\nReply with the formula only."),
    SUPPLY: (
        "Rewrite this temporal logic formula using only atoms from the "
        "vocabulary. Infer and add any environmental preconditions the "
        "text likely left implicit: {formula}\nVocabulary: {atoms}\n"
        "Reply with the formula only."),
}


@dataclass
class PipelineConfig:
    prompt_mode: str
    critic_tree: CriticTreeConfig
    kb: KnowledgeBase
    train: TrainConfig
    out_dir: Path
    corpus_path: Path | None = None
    episodes_path: Path | None = None
    scenario: scenarios.ScenarioSpec | None = None
    n_episodes: int = 70
    grounding: BackendSpec | None = None
    initial_backend: BackendSpec | None = None
    eval_top_k: int = 10
    eval_samples: int | None = None
    checkpoints: int = 5
    raw: dict = field(default_factory=dict)  # source JSON, for the manifest hash

    def __post_init__(self):
        if self.prompt_mode not in (LITERAL, SUPPLY):
            raise ValueError(f"unknown prompt mode {self.prompt_mode!r}")


def _backend_spec(obj: dict | None) -> BackendSpec | None:
    if obj is None:
        return None
    return BackendSpec(**obj)


def load_config(path: str | Path, overrides: dict | None = None) -> PipelineConfig:
    raw = json.loads(Path(path).read_text())
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})
    base = Path(path).parent

    def resolve(p):
        return (base / p) if p and not Path(p).is_absolute() else (Path(p) if p else None)

    kb_section = raw["kb"]
    if isinstance(kb_section, str) and kb_section in scenarios.ARCHETYPES:
        kb = scenarios.scenario_kb(kb_section)
    else:
        kb = KnowledgeBase.load(resolve(kb_section))
    ct = raw["critic_tree"]
    critic_cfg = CriticTreeConfig(
        num_critics=ct["num_critics"], max_depth=ct["max_depth"],
        revisor=BackendSpec(**ct["revisor"]),
        critics=CriticEnsembleSpec(
            members=[(BackendSpec(**m[0]), m[1]) for m in ct["critics"]["members"]],
            seed=ct["critics"].get("seed", raw.get("seed", 0))),
        kb_atoms=kb.atom_vocabulary)
    scenario_spec = None
    if raw.get("scenario"):
        scenario_spec = scenarios.ScenarioSpec(**raw["scenario"])
    return PipelineConfig(
        prompt_mode=raw.get("prompt_mode", LITERAL),
        critic_tree=critic_cfg,
        kb=kb,
        train=TrainConfig(**raw.get("train", {})),
        out_dir=resolve(raw["out_dir"]) if "out_dir" in raw else Path("out"),
        corpus_path=resolve(raw.get("corpus")),
        episodes_path=resolve(raw.get("episodes")),
        scenario=scenario_spec,
        n_episodes=raw.get("n_episodes", 70),
        grounding=_backend_spec(raw.get("grounding")),
        initial_backend=_backend_spec(raw.get("initial_backend")),
        eval_top_k=raw.get("eval", {}).get("top_k", 10),
        eval_samples=raw.get("eval", {}).get("samples"),
        checkpoints=raw.get("eval", {}).get("checkpoints", 5),
        raw=raw)


@dataclass
class SegmentResult:
    segment_id: str
    refined: str
    outcome_tag: str
    detail: str = ""


def _ground_formula(formula_text: str, cfg: PipelineConfig,
                    grounding_backend: Backend | None) -> str:
    if grounding_backend is None:
        return formula_text
    prompt = GROUNDING_TEMPLATES[cfg.prompt_mode].format(
        formula=formula_text, atoms=", ".join(cfg.kb.atom_vocabulary))
    return grounding_backend.complete([ChatMessage("user", prompt)]).content.strip()


def formalize_corpus(texts: list[dict], cfg: PipelineConfig,
                     ) -> tuple[list, compiler.RuleStore, list[SegmentResult]]:
    """Each record needs 'text' and either an 'initial' column or a
    configured initial-translation backend. Per-segment failures become
    outcomes, never aborting the corpus."""
    tree = CriticTree(cfg.critic_tree)
    grounding_backend = make_backend(cfg.grounding) if cfg.grounding else None
    initial_backend = make_backend(cfg.initial_backend) if cfg.initial_backend else None
    provider = compiler.HashedTrigramEmbedding()
    store = compiler.RuleStore()
    outcomes = []
    results = []
    for i, record in enumerate(texts):
        segment_id = str(record.get("id", i))
        text = record["text"]
        if "initial" in record:
            initial = record["initial"]
        elif initial_backend is not None:
            initial = initial_backend.complete([ChatMessage("user", text)]).content.strip()
        else:
            raise ValueError(f"segment {segment_id}: no initial translation source")
        try:
            refined, _ = tree.run(text, initial)
            grounded_text = _ground_formula(refined, cfg, grounding_backend)
            formula = ltl.parse(grounded_text)
        except ltl.ParseError as e:
            outcome = compiler.FormatMismatch(f"unparseable formula: {e}")
            outcomes.append(outcome)
            results.append(SegmentResult(segment_id, record.get("initial", ""),
                                         outcome.tag, outcome.detail))
            continue
        except Exception as e:  # gateway faults
            outcome = compiler.FormatMismatch(f"gateway failure: {e}")
            outcomes.append(outcome)
            results.append(SegmentResult(segment_id, "", outcome.tag, outcome.detail))
            continue
        outcome = compiler.compile_formula(
            formula, cfg.kb, store, provider,
            initial_utility=cfg.train.initial_utility,
            provenance={"segment": segment_id, "formula": ltl.to_string(formula)})
        outcomes.append(outcome)
        detail = getattr(outcome, "detail", "") or getattr(outcome, "existing", "")
        results.append(SegmentResult(segment_id, grounded_text, outcome.tag, str(detail)))
    return outcomes, store, results


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _load_episodes(cfg: PipelineConfig) -> list[trainer.Episode]:
    if cfg.episodes_path is not None:
        return trainer.episodes_from_jsonl(cfg.episodes_path)
    if cfg.scenario is not None:
        policy = scenarios.default_policy(cfg.scenario.archetype)
        return scenarios.generate(cfg.scenario, policy, cfg.n_episodes)
    raise ValueError("config provides neither episodes nor a scenario")


def run_experiment(cfg: PipelineConfig) -> dict:
    """formalize -> train (with JS checkpoints) -> evaluate; writes all
    artifacts plus a manifest of config hash, seeds and artifact hashes."""
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    texts = json.loads(cfg.corpus_path.read_text()) if cfg.corpus_path else []
    outcomes, store, results = formalize_corpus(texts, cfg)
    report = compiler.outcome_report(outcomes)
    episodes = _load_episodes(cfg)
    trainer.validate_episodes(episodes, cfg.kb)

    rules = list(store)
    checkpoints = max(1, cfg.checkpoints)
    epochs_per = max(1, cfg.train.epochs // checkpoints)
    js_curve = []
    curve = []
    if rules:
        js_curve.append((0, metrics.mean_js(rules, episodes, cfg.train.sigma,
                                            cfg.train.seed, cfg.eval_top_k,
                                            cfg.eval_samples)))
        trained = rules
        done = 0
        for ck in range(checkpoints):
            span = min(epochs_per, cfg.train.epochs - done)
            if span <= 0:
                break
            chunk_cfg = TrainConfig(
                learning_rate=cfg.train.learning_rate, decay=cfg.train.decay,
                sigma=cfg.train.sigma,
                initial_utility=cfg.train.initial_utility,
                reward_positive=cfg.train.reward_positive,
                reward_negative=cfg.train.reward_negative,
                epochs=span, seed=cfg.train.seed + ck)
            trained, chunk_curve = trainer.train(trained, episodes, chunk_cfg,
                                                 in_place=True, reset=(ck == 0))
            for pt in chunk_curve:
                curve.append(trainer.CurvePoint(done + pt.epoch, pt.agreement,
                                                pt.mean_utility))
            done += span
            js_curve.append((done, metrics.mean_js(trained, episodes, cfg.train.sigma,
                                                   cfg.train.seed + 1000 + ck,
                                                   cfg.eval_top_k, cfg.eval_samples)))
        rules = trained
    agreement = trainer.evaluate_agreement(rules, episodes, cfg.train.sigma,
                                           cfg.train.seed, n_runs=1) if rules else \
        {"longitudinal": 0.0, "lateral": 0.0}

    store.rules = rules
    store.save(out / "rules.json")
    compiler.write_outcome_csv(report, out / "outcomes.csv")
    trainer.curve_to_csv(curve, out / "curve.csv")
    (out / "js_curve.csv").write_text(
        "updates,mean_js\n" + "".join(f"{n},{v:.6f}\n" for n, v in js_curve))
    (out / "segments.json").write_text(json.dumps(
        [{"id": r.segment_id, "refined": r.refined, "outcome": r.outcome_tag,
          "detail": r.detail} for r in results], indent=2, sort_keys=True))
    trainer.episodes_to_jsonl(episodes, out / "episodes.jsonl")

    config_hash = hashlib.sha256(
        json.dumps(cfg.raw, sort_keys=True).encode()).hexdigest()
    manifest = {
        "config_hash": config_hash,
        "seed": cfg.train.seed,
        "prompt_mode": cfg.prompt_mode,
        "outcomes": report,
        "agreement": agreement,
        "final_js": js_curve[-1][1] if js_curve else None,
        "artifacts": {name: _sha256(out / name)
                      for name in ("rules.json", "outcomes.csv", "curve.csv",
                                   "js_curve.csv", "segments.json", "episodes.jsonl")},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return manifest
