"""Stage orchestration: run directory, manifest, resumable JSONL artifacts."""
from __future__ import annotations

import copy
import hashlib
import json
import logging
import os
import warnings
from concurrent.futures import ThreadPoolExecutor, as_completed
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Optional

from . import report as rpt
from .backends import STATUS_TRANSPORT, HttpChatBackend, JudgeMock, ScriptMock
from .corpus import EncodingError, build_index, corpus_summary, format_summary, ingest_directory, read_index
from .formatting import FormatProfile, detect_profile, render_contract
from .genclient import GenerationConfig, GenerationSample, Validity, continue_script, load_blacklist
from .judge import JudgeFailure, SCORE_KEYS, judge_sample, prompt_hash, PROMPT_VERSION
from .metrics import CompositeWeights, composite, score_sample, tokenize
from .stats import PairItem, align_pairs, descriptives, paired_test

log = logging.getLogger("scripteval")


class PipelineError(Exception):
    exit_code = 1


class ConfigError(PipelineError):
    exit_code = 2


class DependencyError(PipelineError):
    exit_code = 3


class TransportError(PipelineError):
    exit_code = 4


class DataError(PipelineError):
    exit_code = 5


DEFAULT_CONFIG: dict = {
    "generation": GenerationConfig().to_dict(),
    "weights": {"w_rouge": 0.4, "w_struct": 0.3, "w_overall": 0.3},
    "models": ["mock-a", "mock-b"],
    "judge": "mock-judge",
    "backends": {
        "mock-a": {"type": "mock_writer", "fidelity": 1.0},
        "mock-b": {"type": "mock_writer", "fidelity": 0.5, "fail_every": 5, "fail_status": 524},
        "mock-judge": {"type": "mock_judge"},
    },
    "blacklist": None,
    "tokenizer_mode": "cjk_words",
    "min_chars": 1000,
    "split_ratio": 0.5,
    "judge_budget": 12000,
    "judge_temperature": 0.0,
    "judge_max_reasks": 2,
}

CORE = ("rouge_l", "struct_sim", "overall", "composite")


def load_config(path: Optional[Path] = None) -> dict:
    """Defaults overlaid with a JSON config file; ``generation`` and ``weights`` merge per key."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        try:
            user = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        for key, val in user.items():
            if key in ("generation", "weights") and isinstance(val, dict):
                cfg[key].update(val)
            else:
                cfg[key] = val
    try:
        GenerationConfig.from_dict(cfg["generation"])
        CompositeWeights(**cfg["weights"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc
    for name in list(cfg["models"]) + [cfg["judge"]]:
        if name not in cfg["backends"]:
            raise ConfigError(f"backend {name!r} is not defined in the backend registry")
    return cfg


def make_backend(name: str, spec: dict, rate_limit: Optional[float] = None):
    kind = spec.get("type")
    if kind == "openai":
        try:
            return HttpChatBackend(
                name,
                base_url=spec["base_url"],
                model=spec.get("model", name),
                api_key_env=spec.get("api_key_env"),
                timeout=spec.get("timeout", 300.0),
                rate_limit=rate_limit or spec.get("rate_limit"),
            )
        except KeyError as exc:
            raise ConfigError(f"backend {name!r} lacks {exc}") from exc
    if kind == "mock_writer":
        return ScriptMock(name, spec.get("fidelity", 1.0), spec.get("fail_every", 0), spec.get("fail_status", 524))
    if kind == "mock_judge":
        return JudgeMock(name, spec.get("fence", True))
    raise ConfigError(f"backend {name!r} has unknown type {kind!r}")


# --- jsonl -----------------------------------------------------------------

def read_jsonl(path: Path) -> list[dict]:
    """Rows of a JSONL file; a torn final line from an interrupted write is skipped."""
    path = Path(path)
    if not path.exists():
        return []
    rows = []
    lines = path.read_text(encoding="utf-8").split("\n")
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            rows.append(json.loads(line))
        except json.JSONDecodeError:
            if i >= len(lines) - 2:
                log.warning("skipping truncated last line of %s", path)
                continue
            raise DataError(f"corrupt line {i + 1} in {path}")
    return rows


def dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True)


def write_jsonl(path: Path, rows: Iterable[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("w", encoding="utf-8", newline="\n") as fh:
        for r in rows:
            fh.write(dumps(r) + "\n")
    os.replace(tmp, path)


def write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")


def _key(row: dict) -> tuple:
    return (row["film_id"], int(row["sample_idx"]))


def compact(path: Path) -> list[dict]:
    """Sort an append-only stage file by (film_id, sample_idx), keeping the first row per key."""
    seen, out = set(), []
    for r in read_jsonl(path):
        if _key(r) not in seen:
            seen.add(_key(r))
            out.append(r)
    out.sort(key=_key)
    write_jsonl(path, out)
    return out


def _resume(path: Path) -> list[dict]:
    """Rows already on disk; a torn tail is cut off so new appends start on a fresh line."""
    return compact(path) if Path(path).exists() else []


def bundled_corpus() -> Path:
    return Path(str(resources.files("scripteval").joinpath("data/minicorpus")))


# --- workspace -------------------------------------------------------------

class Workspace:
    """One run directory ``<root>/<run_id>`` with its manifest and stage files."""

    def __init__(
        self,
        root: Path,
        run_id: str,
        config: Optional[dict] = None,
        force: bool = False,
        workers: int = 1,
        rate_limit: Optional[float] = None,
    ):
        self.root = Path(root)
        self.run_id = run_id
        self.dir = self.root / run_id
        self.config = config if config is not None else load_config()
        self.force = force
        self.workers = max(1, int(workers))
        self.rate_limit = rate_limit
        self.backend_overrides: dict = {}
        self._backends: dict = {}
        self.manifest = self._load_manifest()

    # manifest
    @property
    def manifest_path(self) -> Path:
        return self.dir / "manifest.json"

    def _load_manifest(self) -> dict:
        if self.manifest_path.exists():
            m = json.loads(self.manifest_path.read_text(encoding="utf-8"))
            if m.get("config") != self.config:
                raise ConfigError(
                    f"run {self.run_id!r} was started with a different config; use a new --run-id"
                )
            return m
        now = _now()
        return {
            "run_id": self.run_id,
            "created": now,
            "updated": now,
            "config": self.config,
            "config_sha256": hashlib.sha256(dumps(self.config).encode()).hexdigest(),
            "models": list(self.config["models"]),
            "index_sha256": None,
            "stages": {},
        }

    def _save_manifest(self) -> None:
        self.manifest["updated"] = _now()
        write_text(self.manifest_path, json.dumps(self.manifest, ensure_ascii=False, indent=2, sort_keys=True) + "\n")

    def done(self, stage: str) -> bool:
        return bool(self.manifest["stages"].get(stage, {}).get("done"))

    def begin(self, stage: str) -> bool:
        if self.done(stage) and not self.force:
            log.info("stage %s already complete for run %s; skipping (use --force to redo)", stage, self.run_id)
            return False
        self.dir.mkdir(parents=True, exist_ok=True)
        self.manifest["stages"][stage] = {"done": False, "started": _now()}
        self._save_manifest()
        return True

    def complete(self, stage: str, **info) -> None:
        self.manifest["stages"][stage].update(done=True, completed=_now(), **info)
        self._save_manifest()

    def require(self, *stages: str) -> None:
        for s in stages:
            if not self.done(s):
                raise DependencyError(f"stage {s!r} has not completed for run {self.run_id!r}; run it first")

    # paths and resources
    @property
    def index_path(self) -> Path:
        return self.dir / "index.jsonl"

    def model_dir(self, model: str) -> Path:
        return self.dir / "models" / model

    def records(self):
        return read_index(self.index_path)

    def profile(self, rec) -> FormatProfile:
        return FormatProfile.from_dict(json.loads((self.dir / rec.profile_path).read_text(encoding="utf-8")))

    def read(self, rec, attr: str) -> str:
        return rec.resolve(self.dir, attr).read_text(encoding="utf-8")

    def generation_config(self) -> GenerationConfig:
        return GenerationConfig.from_dict(self.config["generation"])

    def weights(self) -> CompositeWeights:
        return CompositeWeights(**self.config["weights"])

    def backend(self, name: str):
        if name in self.backend_overrides:
            return self.backend_overrides[name]
        if name not in self._backends:
            spec = self.config["backends"].get(name)
            if spec is None:
                raise ConfigError(f"backend {name!r} is not defined in the backend registry")
            self._backends[name] = make_backend(name, spec, self.rate_limit)
        return self._backends[name]

    def blacklist(self) -> list[str]:
        path = self.config.get("blacklist")
        try:
            return load_blacklist(Path(path) if path else None)
        except OSError as exc:
            raise ConfigError(f"cannot read blacklist {path}: {exc}") from exc


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _fan_out(ws: Workspace, jobs: list, fn: Callable, out_path: Path) -> list[dict]:
    """Run jobs on a worker pool; the calling thread is the only writer."""
    rows = []
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("a", encoding="utf-8", newline="\n") as fh:
        pool = ThreadPoolExecutor(max_workers=ws.workers)
        try:
            futures = [pool.submit(fn, job) for job in jobs]
            for fut in as_completed(futures):
                row = fut.result()
                fh.write(dumps(row) + "\n")
                fh.flush()
                rows.append(row)
        except BaseException:
            pool.shutdown(wait=True, cancel_futures=True)
            raise
        pool.shutdown(wait=True)
    return rows


# --- stages ----------------------------------------------------------------

def stage_ingest(ws: Workspace, src: Optional[Path] = None) -> Optional[dict]:
    if not ws.begin("ingest"):
        return None
    src = Path(src) if src is not None else bundled_corpus()
    if not src.is_dir():
        raise DataError(f"corpus directory {src} does not exist")
    try:
        result = ingest_directory(src, ws.dir, ws.config["split_ratio"], ws.config["min_chars"])
    except FileNotFoundError as exc:
        raise DataError(str(exc)) from exc
    except EncodingError as exc:
        raise DataError(str(exc)) from exc
    for film_id, reason in result.dropped:
        log.warning("dropped %s: %s", film_id, reason)
    build_index(result.records, ws.index_path)
    summary = corpus_summary(result.records)
    write_text(ws.dir / "corpus_summary.json", json.dumps({"run_id": ws.run_id, **summary}, ensure_ascii=False, indent=2, sort_keys=True) + "\n")
    write_jsonl(ws.dir / "ingest_log.jsonl", [{"run_id": ws.run_id, "film_id": f, "dropped": r} for f, r in result.dropped])
    ws.manifest["index_sha256"] = hashlib.sha256(ws.index_path.read_bytes()).hexdigest()
    ws.complete("ingest", films=len(result.records), dropped=len(result.dropped))
    print(format_summary(summary))
    return summary


def stage_profile(ws: Workspace) -> None:
    ws.require("ingest")
    if not ws.begin("profile"):
        return
    for rec in ws.records():
        profile = detect_profile(ws.read(rec, "upper_path"))
        write_text(ws.dir / rec.profile_path, json.dumps(profile.to_dict(), ensure_ascii=False, indent=2) + "\n")
        write_text(ws.dir / rec.contract_path, render_contract(profile))
    ws.complete("profile")


def stage_generate(ws: Workspace, model: str) -> None:
    ws.require("profile")
    stage = f"generate:{model}"
    if not ws.begin(stage):
        return
    path = ws.model_dir(model) / "samples.jsonl"
    if ws.force and path.exists():
        path.unlink()
    done = {_key(r) for r in _resume(path)}
    cfg = ws.generation_config()
    backend = ws.backend(model)
    blacklist = ws.blacklist()
    jobs = []
    for rec in ws.records():
        for idx in range(cfg.samples_per_film):
            if (rec.film_id, idx) not in done:
                jobs.append((rec, idx))

    def run(job):
        rec, idx = job
        upper = ws.read(rec, "upper_path")
        contract = (ws.dir / rec.contract_path).read_text(encoding="utf-8")
        sample = continue_script(upper, contract, backend, cfg, blacklist, model, rec.film_id, idx)
        return {"run_id": ws.run_id, **sample.to_dict()}

    new_rows = _fan_out(ws, jobs, run, path)
    rows = compact(path)
    if new_rows and all(r["chunk_trace"] and r["chunk_trace"][-1][2] == STATUS_TRANSPORT for r in new_rows):
        raise TransportError(f"every generation call to backend {model!r} failed at the transport level")
    valid = sum(r["validity"] == Validity.VALID.value for r in rows)
    ws.complete(stage, samples=len(rows), valid=valid)
    log.info("%s: %d samples, %d valid", stage, len(rows), valid)


def _samples(ws: Workspace, model: str) -> list[GenerationSample]:
    return [GenerationSample.from_dict(r) for r in read_jsonl(ws.model_dir(model) / "samples.jsonl")]


def stage_judge(ws: Workspace, model: str) -> None:
    ws.require("profile", f"generate:{model}")
    stage = f"judge:{model}"
    if not ws.begin(stage):
        return
    path = ws.model_dir(model) / "verdicts.jsonl"
    if ws.force and path.exists():
        path.unlink()
    done = {_key(r) for r in _resume(path)}
    backend = ws.backend(ws.config["judge"])
    records = {r.film_id: r for r in ws.records()}
    phash = prompt_hash()
    jobs = [s for s in _samples(ws, model) if s.validity is Validity.VALID and (s.film_id, s.sample_idx) not in done]

    def run(s: GenerationSample):
        rec = records[s.film_id]
        base = {"run_id": ws.run_id, "model_id": model, "film_id": s.film_id, "sample_idx": s.sample_idx,
                "prompt_version": PROMPT_VERSION, "prompt_sha256": phash}
        try:
            v = judge_sample(
                ws.read(rec, "lower_path"), s.text, ws.profile(rec), backend,
                max_reasks=ws.config["judge_max_reasks"],
                temperature=ws.config["judge_temperature"],
                budget=ws.config["judge_budget"],
            )
        except JudgeFailure as exc:
            return {**base, "status": "failed", "error": str(exc), "raw": exc.raw,
                    "attempts": exc.attempts, "transport": exc.transport}
        return {**base, "status": "ok", **v.to_dict(), "raw": v.raw, "attempts": v.attempts}

    _fan_out(ws, jobs, run, path)
    rows = compact(path)
    ok = sum(r["status"] == "ok" for r in rows)
    ws.complete(stage, verdicts=len(rows), ok=ok)


def _verdicts(ws: Workspace, model: str) -> dict:
    return {_key(r): r for r in read_jsonl(ws.model_dir(model) / "verdicts.jsonl") if r["status"] == "ok"}


def stage_score(ws: Workspace, model: str) -> None:
    ws.require("profile", f"generate:{model}")
    stage = f"score:{model}"
    if not ws.begin(stage):
        return
    mode = ws.config["tokenizer_mode"]
    weights = ws.weights()
    verdicts = _verdicts(ws, model) if ws.done(f"judge:{model}") else {}
    records = {r.film_id: r for r in ws.records()}
    ref_cache: dict = {}
    rows = []
    for s in _samples(ws, model):
        if s.validity is not Validity.VALID:
            continue
        rec = records[s.film_id]
        if s.film_id not in ref_cache:
            ref = ws.read(rec, "lower_path")
            ref_cache[s.film_id] = (ref, tokenize(ref, mode), ws.profile(rec))
        ref, ref_tokens, profile = ref_cache[s.film_id]
        v = verdicts.get((s.film_id, s.sample_idx))
        overall = v["overall_similarity_0_100"] if v else None
        card = score_sample(s.text, ref, profile, mode, overall, weights, ref_tokens=ref_tokens)
        rows.append({
            "run_id": ws.run_id,
            "model_id": model,
            "film_id": s.film_id,
            "sample_idx": s.sample_idx,
            "rouge": card.rouge.to_dict(),
            "features": card.features.to_dict(),
            "ref_features": card.ref_features.to_dict(),
            "struct_sim": card.struct_sim,
            "overall": card.overall,
            "composite": card.composite,
            "tokenizer_mode": card.tokenizer_mode,
        })
    rows.sort(key=_key)
    write_jsonl(ws.model_dir(model) / "scores.jsonl", rows)
    ws.complete(stage, scored=len(rows))


def pair_items(ws: Workspace, model: str) -> list[PairItem]:
    """Per-sample metric bundles rebuilt from samples, scores and verdicts."""
    weights = ws.weights()
    scores = {_key(r): r for r in read_jsonl(ws.model_dir(model) / "scores.jsonl")}
    verdicts = _verdicts(ws, model)
    items = []
    for s in _samples(ws, model):
        key = (s.film_id, s.sample_idx)
        sc, v = scores.get(key), verdicts.get(key)
        metrics = {}
        if sc is not None:
            metrics["rouge_l"] = sc["rouge"]["f1"]
            metrics["struct_sim"] = sc["struct_sim"]
        if v is not None:
            metrics["overall"] = v["overall_similarity_0_100"]
            for k in SCORE_KEYS[1:]:
                metrics[k] = v[k]
        if sc is not None and v is not None:
            metrics["composite"] = composite(metrics["rouge_l"], metrics["struct_sim"], metrics["overall"], weights)
        items.append(PairItem(
            s.film_id, s.sample_idx,
            valid=s.validity is Validity.VALID and sc is not None,
            judged=v is not None,
            metrics=metrics,
        ))
    return items


def _models(ws: Workspace, model_a: Optional[str], model_b: Optional[str]) -> tuple[str, str]:
    models = ws.config["models"]
    a = model_a or (models[0] if models else None)
    b = model_b or (models[1] if len(models) > 1 else None)
    if not a or not b:
        raise ConfigError("two models are needed for a paired comparison")
    return a, b


def _column(items, key):
    return [it.metrics[key] for it in items if key in it.metrics]


def stage_stats(ws: Workspace, model_a: Optional[str] = None, model_b: Optional[str] = None) -> list[dict]:
    a, b = _models(ws, model_a, model_b)
    ws.require(f"score:{a}", f"score:{b}", f"judge:{a}", f"judge:{b}")
    if not ws.begin("stats"):
        return json.loads((ws.dir / "stats_report.json").read_text(encoding="utf-8"))
    items_a, items_b = pair_items(ws, a), pair_items(ws, b)
    pairs = align_pairs(items_a, items_b)
    if not pairs:
        log.warning("no overlapping valid, judged pairs between %s and %s; no tests run", a, b)
    results = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for metric in CORE:
            res = paired_test(metric, [p[0].metrics[metric] for p in pairs], [p[1].metrics[metric] for p in pairs])
            results.append({"run_id": ws.run_id, "model_a": a, "model_b": b, **res.to_dict()})
    for w in caught:
        log.warning("%s", w.message)
    write_text(ws.dir / "stats_report.json", json.dumps(results, ensure_ascii=False, indent=2, sort_keys=True) + "\n")

    desc: dict = {"run_id": ws.run_id, "models": {}}
    metric_keys = ("rouge_l", "struct_sim", "overall", *SCORE_KEYS[1:], "composite")
    for model, items in ((a, items_a), (b, items_b)):
        variants = {
            "all_valid": [it for it in items if it.valid],
            "judged": [it for it in items if it.valid and it.judged],
        }
        desc["models"][model] = {
            name: {k: descriptives(_column(sel, k)).to_dict() for k in metric_keys if _column(sel, k)}
            for name, sel in variants.items()
        }
    write_text(ws.dir / "descriptives.json", json.dumps(desc, ensure_ascii=False, indent=2, sort_keys=True) + "\n")
    ws.complete("stats", n_pairs=len(pairs), model_a=a, model_b=b)
    return results


def stage_report(ws: Workspace) -> Path:
    ws.require("stats")
    if not ws.begin("report"):
        return ws.dir / "report"
    info = ws.manifest["stages"]["stats"]
    a, b = info["model_a"], info["model_b"]
    results = json.loads((ws.dir / "stats_report.json").read_text(encoding="utf-8"))
    items_a, items_b = pair_items(ws, a), pair_items(ws, b)
    pairs = align_pairs(items_a, items_b)
    records = ws.records()
    cfg = ws.generation_config()
    theoretical = len(records) * cfg.samples_per_film
    valid_a = sum(s.validity is Validity.VALID for s in _samples(ws, a))
    valid_b = sum(s.validity is Validity.VALID for s in _samples(ws, b))

    def cols(items, pred):
        sel = [it for it in items if pred(it)]
        return {k: _column(sel, k) for k in ("rouge_l", "struct_sim", "overall", *SCORE_KEYS[1:], "composite")}

    all_a, all_b = cols(items_a, lambda it: it.valid), cols(items_b, lambda it: it.valid)
    jd_a = cols(items_a, lambda it: it.valid and it.judged)
    jd_b = cols(items_b, lambda it: it.valid and it.judged)

    summary = corpus_summary(records)
    t1 = rpt.Table("Dataset Statistics", ["Statistic", "Value"],
                   [line.split("\t", 1) for line in format_summary(summary).split("\n")])
    t2 = rpt.table_samples(a, b, theoretical, valid_a, valid_b, len(pairs))
    t3 = rpt.table_means("Automated Metric Comparison (all valid samples)", rpt.AUTO_METRICS, a, b, all_a, all_b)
    t3j = rpt.table_means("Automated Metric Comparison (judged samples)", rpt.AUTO_METRICS, a, b, jd_a, jd_b)
    t4 = rpt.table_means("Judge Score Comparison (judged samples)", rpt.JUDGE_DIMENSIONS, a, b, jd_a, jd_b)
    t5 = rpt.table_paired(results, a, b)

    # formula applied to the paired component means, next to the mean of per-sample composites
    cross = rpt.Table("Composite: mean of per-sample values vs formula over means (paired)",
                      ["Model", "Mean composite", "Composite of means"])
    weights = ws.weights()
    for side, label in ((0, a), (1, b)):
        if pairs:
            means = {k: sum(p[side].metrics[k] for p in pairs) / len(pairs) for k in CORE}
            over = composite(means["rouge_l"], means["struct_sim"], means["overall"], weights)
            cross.rows.append([label, rpt.fmt(means["composite"]), rpt.fmt(over)])
        else:
            cross.rows.append([label, rpt.DASH, rpt.DASH])

    da = descriptives(jd_a["composite"]) if jd_a["composite"] else None
    db = descriptives(jd_b["composite"]) if jd_b["composite"] else None
    t6 = rpt.table_descriptives("Composite Score Descriptive Statistics (judged samples)", a, b, da, db)

    out = ws.dir / "report"
    tables = [("table1_dataset", t1), ("table2_samples", t2), ("table3_automated_all_valid", t3),
              ("table3_automated_judged", t3j), ("table4_judge", t4), ("table5_paired", t5),
              ("table5_composite_crosscheck", cross), ("table6_composite", t6)]
    md = [f"# Continuation benchmark report\n\nRun: `{ws.run_id}`; models: `{a}` (A) vs `{b}` (B); "
          f"differences are A - B.\n"]
    for name, t in tables:
        md.append(t.markdown())
        write_text(out / f"{name}.csv", t.csv())
    write_text(out / "tables.md", "\n".join(md))

    write_text(out / "forest.csv", rpt.to_csv(["metric", "d", "ci_low", "ci_high", "band"], rpt.forest_rows(results)))
    points = {}
    for model, items in ((a, items_a), (b, items_b)):
        points[model] = [(it.film_id, it.sample_idx, it.metrics["rouge_l"], it.metrics["overall"])
                         for it in items if it.valid and it.judged]
    write_text(out / "scatter.csv", rpt.to_csv(
        ["model", "film_id", "sample_idx", "rouge_f1", "overall", "r_model"], rpt.scatter_rows(points)))
    qpoints, qcounts = rpt.quadrant_rows([
        (pa.film_id, pa.sample_idx,
         pa.metrics["rouge_l"] - pb.metrics["rouge_l"], pa.metrics["overall"] - pb.metrics["overall"])
        for pa, pb in pairs
    ])
    write_text(out / "quadrants.csv", rpt.to_csv(["film_id", "sample_idx", "d_rouge", "d_overall", "quadrant"], qpoints))
    write_text(out / "quadrant_counts.csv", rpt.to_csv(["quadrant", "count"], qcounts))
    write_text(out / "perfilm.csv", rpt.to_csv(
        ["film_id", "n_pairs", "struct_a", "struct_b", "diff"],
        rpt.perfilm_rows([(pa.film_id, pa.metrics["struct_sim"], pb.metrics["struct_sim"]) for pa, pb in pairs])))
    ws.complete("report")
    return out


def run_all(ws: Workspace, src: Optional[Path] = None) -> Path:
    """Every stage in order for the configured models."""
    stage_ingest(ws, src)
    stage_profile(ws)
    models = ws.config["models"]
    for m in models:
        stage_generate(ws, m)
    for m in models:
        stage_judge(ws, m)
    for m in models:
        stage_score(ws, m)
    stage_stats(ws)
    return stage_report(ws)
