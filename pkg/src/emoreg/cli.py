"""``emoreg`` command-line front end.

Exit codes: 0 success, 2 validation error, 3 numerical error. Every
produced artifact gets a provenance JSON next to it recording input hashes,
flags and package versions (no timestamps, so reruns are byte-identical).
"""
from __future__ import annotations

import argparse
import json
import platform
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import PipelineConfig
from .diffusion import (
    NoiseSchedule,
    ScoreNet,
    oracle_score_fn,
    reverse_solve_paths,
    train_scorenet,
)
from .dvm import IntensityRequest, direction_vector, fit_dvm, global_direction, regularize, regularize_global
from .errors import NumericalError, ValidationError
from .labels import TARGET_EMOTIONS, Emotion
from .melproc import build_phoneme_table, load_alignment, save_alignment, substitute_average
from .metrics import intensity_sweep, monotone_fraction, random_direction_trials, sweep_along, validate_grid
from .store import (
    load_dvm,
    load_phoneme_table,
    load_schedule,
    load_scorenet,
    save_dvm,
    save_phoneme_table,
    save_schedule,
    save_scorenet,
)
from .synthgen import SynthConfig, generate_embeddings, generate_mel_corpus
from .tensorio import file_sha256, load_embedding_set, read_matrix, read_vector, save_embedding_set, write_matrix

EMBEDDINGS_FILE = "embeddings.emo"
LABELS_FILE = "labels.json"
PROVENANCE_FILE = "provenance.json"


# --------------------------------------------------------------------------
# helpers

def parse_grid(text: str) -> list[float]:
    """``start:end:step`` with inclusive endpoints, or a comma-separated list."""
    try:
        parts = [float(p) for p in text.split(":" if ":" in text else ",")]
    except ValueError:
        raise ValidationError(f"malformed grid {text!r}; expected start:end:step") from None
    if ":" not in text:
        return validate_grid(parts)
    if len(parts) != 3:
        raise ValidationError(f"malformed grid {text!r}; expected start:end:step")
    start, end, step = parts
    if not step > 0:
        raise ValidationError(f"grid step must be > 0, got {step}")
    if end < start:
        raise ValidationError(f"grid {text!r} is descending (end {end} < start {start})")
    n = int(round((end - start) / step))
    if abs(start + n * step - end) > 1e-9 * max(1.0, abs(end)):
        raise ValidationError(f"grid step {step} does not divide [{start}, {end}]")
    return validate_grid([round(start + k * step, 12) for k in range(n + 1)])


def _emotion(text: str) -> Emotion:
    return Emotion.parse(text)


def _versions() -> dict[str, str]:
    return {"emoreg": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _flags(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in ("func", "out"):
            continue
        if isinstance(v, Path):
            v = v.name
        elif isinstance(v, Emotion):
            v = v.value
        out[k] = v
    return out


def _inputs(paths: dict[str, Path | None]) -> dict:
    rec = {}
    for name, p in sorted(paths.items()):
        if p is None:
            continue
        p = Path(p)
        if p.is_dir():
            files = sorted(q for q in p.rglob("*") if q.is_file() and q.name != PROVENANCE_FILE)
            rec[name] = {"dir": p.name, "files": {str(q.relative_to(p)): file_sha256(q) for q in files}}
        else:
            rec[name] = {"file": p.name, "sha256": file_sha256(p)}
    return rec


def write_provenance(path: Path, command: str, args, inputs: dict[str, Path | None],
                     outputs: list[Path], extra: dict | None = None) -> None:
    payload = {
        "command": command,
        "flags": _flags(args),
        "inputs": _inputs(inputs),
        "outputs": {Path(o).name: file_sha256(o) for o in outputs},
        "versions": _versions(),
    }
    if extra:
        payload["results"] = extra
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _sidecar(artifact: Path) -> Path:
    return artifact.with_name(artifact.name + ".provenance.json")


def _config(args) -> PipelineConfig:
    return PipelineConfig.load(args.config) if getattr(args, "config", None) else PipelineConfig()


def _pick(flag, default):
    return default if flag is None else flag


def _schedule(args, cfg: PipelineConfig) -> tuple[NoiseSchedule, float]:
    if getattr(args, "schedule", None):
        s, t_min = load_schedule(args.schedule)
    else:
        s, t_min = cfg.schedule, cfg.t_min
    if getattr(args, "beta0", None) is not None or getattr(args, "beta1", None) is not None:
        s = NoiseSchedule(_pick(args.beta0, s.beta0), _pick(args.beta1, s.beta1))
    return s, _pick(getattr(args, "tmin", None), t_min)


def _corpus(corpus_dir: Path):
    """(mel, alignment) pairs for every ``<stem>.align.json`` + ``<stem>.emo``."""
    corpus_dir = Path(corpus_dir)
    aligns = sorted(corpus_dir.glob("*.align.json"))
    if not aligns:
        raise ValidationError(f"{corpus_dir}: no *.align.json files found")
    out = []
    for a in aligns:
        mel_path = a.with_name(a.name[: -len(".align.json")] + ".emo")
        if not mel_path.exists():
            raise ValidationError(f"{a.name}: matching Mel file {mel_path.name} is missing")
        out.append((read_matrix(mel_path), load_alignment(a)))
    return out


# --------------------------------------------------------------------------
# subcommands

def cmd_gen_data(args) -> int:
    cfg = _config(args)
    overrides = {k: getattr(args, k) for k in SynthConfig.__dataclass_fields__
                 if getattr(args, k, None) is not None}
    synth = SynthConfig.from_dict({**cfg.synth.to_dict(), **overrides})
    es = generate_embeddings(synth)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_embedding_set(es, out / EMBEDDINGS_FILE, out / LABELS_FILE)
    counts = es.counts()
    for e, n in counts.items():
        print(f"{e.value}: {n} rows")
    print(f"wrote {len(es)} rows x {es.dim} dims in {len(counts)} label groups to {out}")
    write_provenance(out / PROVENANCE_FILE, "gen-data", args, {"config": args.config},
                     [out / EMBEDDINGS_FILE, out / LABELS_FILE], {"synth": synth.to_dict()})
    return 0


def cmd_gen_mel(args) -> int:
    corpus = generate_mel_corpus(args.seed, args.utterances, (args.min_frames, args.max_frames),
                                 args.inventory, noise=args.noise, channels=args.channels)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    for n, (mel, align) in enumerate(corpus):
        write_matrix(mel, out / f"utt_{n:04d}.emo")
        save_alignment(align, out / f"utt_{n:04d}.align.json")
        files += [out / f"utt_{n:04d}.emo", out / f"utt_{n:04d}.align.json"]
    print(f"wrote {len(corpus)} utterances to {out}")
    write_provenance(out / PROVENANCE_FILE, "gen-mel", args, {}, files)
    return 0


def cmd_fit(args) -> int:
    cfg = _config(args)
    gmm_cfg = replace(cfg.gmm, k=_pick(args.k, cfg.gmm.k), seed=_pick(args.seed, cfg.gmm.seed),
                      max_iters=_pick(args.max_iters, cfg.gmm.max_iters))
    n_comp = _pick(args.components, cfg.n_components)
    es = load_embedding_set(args.embeddings, args.labels)
    model = fit_dvm(es, gmm_cfg, n_comp)
    out = Path(args.out)
    manifest = save_dvm(model, out)
    results = {"final_log_likelihood": {}, "explained_variance": {}}
    for e, g in model.gmms.items():
        print(f"{e.value}: final log-likelihood {g.final_log_likelihood:.6f} "
              f"(k={g.k}, {g.n_iter} iterations)")
        results["final_log_likelihood"][e.value] = g.final_log_likelihood
    for t, p in model.pcas.items():
        print(f"{t.value} PCA: explained variance {p.explained_variance_ratio:.6f} "
              f"({p.n_components} components)")
        results["explained_variance"][t.value] = p.explained_variance_ratio
    write_provenance(out / PROVENANCE_FILE, "fit", args,
                     {"embeddings": args.embeddings, "labels": args.labels, "config": args.config},
                     [manifest], results)
    return 0


def cmd_regularize(args) -> int:
    e_s = read_vector(args.source_vec)
    e_r = read_vector(args.ref_vec)
    req = IntensityRequest(e_s, e_r, args.target, args.intensity)
    if args.baseline_global:
        if args.embeddings is None or args.labels is None:
            raise ValidationError("--baseline-global needs --embeddings and --labels")
        e_ir = regularize_global(load_embedding_set(args.embeddings, args.labels), req)
    else:
        if args.model is None:
            raise ValidationError("--model is required unless --baseline-global is given")
        e_ir = regularize(load_dvm(args.model), req)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_matrix(e_ir, out)
    norm = float(np.linalg.norm(e_ir - e_s))
    print(f"{req.target.value} intensity {req.intensity}: |e_ir - e_s| = {norm:.9g}")
    write_provenance(_sidecar(out), "regularize", args,
                     {"model": args.model, "source_vec": args.source_vec, "ref_vec": args.ref_vec,
                      "embeddings": args.embeddings, "labels": args.labels},
                     [out], {"displacement_norm": norm})
    return 0


def cmd_schedule(args) -> int:
    cfg = _config(args)
    s, t_min = _schedule(args, cfg)
    path = save_schedule(s, args.out, t_min)
    write_provenance(Path(args.out) / PROVENANCE_FILE, "schedule", args, {}, [path])
    return 0


def cmd_train_score(args) -> int:
    cfg = _config(args)
    s, t_min = _schedule(args, cfg)
    table = load_phoneme_table(args.table)
    corpus = _corpus(args.corpus_dir)
    cond = read_vector(args.condition) if args.condition else np.zeros(args.cond_dim)
    hidden = tuple(int(h) for h in args.hidden.split(",") if h)
    net = ScoreNet(channels=table.channels, cond_dim=cond.shape[0], time_dim=args.time_dim,
                   hidden=hidden, seed=args.seed)
    items = [(np.asarray(mel, dtype=np.float64), substitute_average(mel, al, table), cond)
             for mel, al in corpus]
    net, losses = train_scorenet(net, items, s, steps=args.steps, batch_size=args.batch_size,
                                 lr=args.lr, seed=args.seed, t_min=t_min)
    head = float(np.mean(losses[:10])) if losses else float("nan")
    tail = float(np.mean(losses[-10:])) if losses else float("nan")
    print(f"trained {net.n_params} parameters for {args.steps} steps: "
          f"loss {head:.6g} -> {tail:.6g} (mean of first/last 10)")
    path = save_scorenet(net, args.out, {"train_steps": args.steps, "seed": args.seed})
    write_provenance(Path(args.out) / PROVENANCE_FILE, "train-score", args,
                     {"table": args.table, "corpus_dir": args.corpus_dir, "condition": args.condition,
                      "schedule": args.schedule},
                     [path], {"loss_first10": head, "loss_last10": tail})
    return 0


def cmd_sample(args) -> int:
    cfg = _config(args)
    s, t_min = _schedule(args, cfg)
    n_steps = _pick(args.steps, cfg.n_steps)
    seed = _pick(args.seed, cfg.seed)
    xbar = read_matrix(args.xbar).astype(np.float64)
    cond = read_vector(args.condition) if args.condition else None
    if args.oracle_x0:
        x0 = read_matrix(args.oracle_x0).astype(np.float64)
        score = oracle_score_fn(x0, s)
    else:
        score = load_scorenet(args.model_scorenet)
    if args.paths < 1:
        raise ValidationError(f"--paths must be >= 1, got {args.paths}")
    paths = reverse_solve_paths(args.paths, xbar, score, s, n_steps, t_min, seed, cond)
    y = paths.mean(axis=0)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_matrix(y, out)
    hyper = {"beta0": s.beta0, "beta1": s.beta1, "n_steps": n_steps, "t_min": t_min,
             "seed": seed, "n_paths": args.paths,
             "score": "oracle" if args.oracle_x0 else "scorenet"}
    print(f"sampled {args.paths} path(s) of shape {xbar.shape} with {n_steps} steps")
    write_provenance(_sidecar(out), "sample", args,
                     {"xbar": args.xbar, "oracle_x0": args.oracle_x0, "model_scorenet": args.model_scorenet,
                      "condition": args.condition, "schedule": args.schedule},
                     [out], {"hyperparameters": hyper})
    return 0


def cmd_eval_sweep(args) -> int:
    grid = parse_grid(args.grid)
    model = load_dvm(args.model)
    data = Path(args.data)
    es = load_embedding_set(data / EMBEDDINGS_FILE, data / LABELS_FILE)
    e_s = es.centroid(Emotion.NEUTRAL)
    report = {"grid": grid, "targets": {}}
    for t in TARGET_EMOTIONS:
        anchor = es.centroid(t)
        rep = intensity_sweep(model, e_s, anchor, t, grid, anchor)
        entry = rep.to_json()
        g = global_direction(es, t)
        entry["global_ablation"] = sweep_along(e_s, g, anchor, grid).to_json()
        if args.controls:
            e_d = direction_vector(model, e_s, anchor, t)
            dvm_ctl = random_direction_trials(e_s, e_d, anchor, grid, args.controls, args.seed)
            glob_ctl = random_direction_trials(e_s, g, anchor, grid, args.controls, args.seed)
            entry["controls"] = {
                "n_trials": args.controls,
                "dvm_random_monotone_fraction": monotone_fraction(dvm_ctl),
                "global_random_monotone_fraction": monotone_fraction(glob_ctl),
                "direction_norm": float(np.linalg.norm(e_d)),
            }
        report["targets"][t.value] = entry
        print(f"{t.value}: spearman {rep.spearman:.6f} monotone {str(rep.monotone).lower()}")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    write_provenance(_sidecar(out), "eval-sweep", args, {"model": args.model, "data": args.data}, [out])
    return 0


def cmd_avg_phoneme(args) -> int:
    table = build_phoneme_table(_corpus(args.corpus_dir))
    path = save_phoneme_table(table, args.out)
    print(f"{len(table.phonemes)} phonemes, {sum(table.counts)} frames, {table.channels} channels")
    write_provenance(Path(args.out) / PROVENANCE_FILE, "avg-phoneme", args,
                     {"corpus_dir": args.corpus_dir}, [path])
    return 0


def cmd_substitute(args) -> int:
    mel = read_matrix(args.mel)
    align = load_alignment(args.align)
    table = load_phoneme_table(args.table)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_matrix(substitute_average(mel, align, table), out)
    write_provenance(_sidecar(out), "substitute", args,
                     {"mel": args.mel, "align": args.align, "table": args.table}, [out])
    return 0


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="emoreg", description="Emotion intensity regularization toolkit.")
    p.add_argument("--version", action="version", version=f"emoreg {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="generate a synthetic labeled embedding set")
    g.add_argument("--config", type=Path)
    g.add_argument("--out", type=Path, required=True)
    g.add_argument("--dim", type=int)
    g.add_argument("--clusters-per-emotion", type=int, dest="clusters_per_emotion")
    g.add_argument("--samples-per-emotion", type=int, dest="samples_per_emotion")
    g.add_argument("--separation", type=float)
    g.add_argument("--stddev", type=float)
    g.add_argument("--cluster-spread", type=float, dest="cluster_spread")
    g.add_argument("--anchor-norm", type=float, dest="anchor_norm")
    g.add_argument("--seed", type=int)
    g.set_defaults(func=cmd_gen_data)

    g = sub.add_parser("gen-mel", help="generate a phoneme-aligned toy Mel corpus")
    g.add_argument("--out", type=Path, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--utterances", type=int, default=20)
    g.add_argument("--min-frames", type=int, default=40)
    g.add_argument("--max-frames", type=int, default=80)
    g.add_argument("--inventory", type=int, default=10)
    g.add_argument("--noise", type=float, default=0.1)
    g.add_argument("--channels", type=int, default=80)
    g.set_defaults(func=cmd_gen_mel)

    g = sub.add_parser("fit", help="fit GMMs and direction-vector PCAs")
    g.add_argument("--config", type=Path)
    g.add_argument("--embeddings", type=Path, required=True)
    g.add_argument("--labels", type=Path, required=True)
    g.add_argument("--k", type=int)
    g.add_argument("--components", type=int)
    g.add_argument("--max-iters", type=int, dest="max_iters")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", type=Path, required=True)
    g.set_defaults(func=cmd_fit)

    g = sub.add_parser("regularize", help="intensity-scaled embedding e_ir")
    g.add_argument("--model", type=Path)
    g.add_argument("--source-vec", type=Path, required=True)
    g.add_argument("--ref-vec", type=Path, required=True)
    g.add_argument("--target", type=_emotion, required=True)
    g.add_argument("--intensity", type=float, required=True)
    g.add_argument("--baseline-global", action="store_true")
    g.add_argument("--embeddings", type=Path)
    g.add_argument("--labels", type=Path)
    g.add_argument("--out", type=Path, required=True)
    g.set_defaults(func=cmd_regularize)

    def schedule_flags(g):
        g.add_argument("--config", type=Path)
        g.add_argument("--schedule", type=Path, help="schedule manifest")
        g.add_argument("--beta0", type=float)
        g.add_argument("--beta1", type=float)
        g.add_argument("--tmin", type=float)

    g = sub.add_parser("schedule", help="write a noise-schedule manifest")
    schedule_flags(g)
    g.add_argument("--out", type=Path, required=True)
    g.set_defaults(func=cmd_schedule)

    g = sub.add_parser("train-score", help="train the toy score network by DSM")
    schedule_flags(g)
    g.add_argument("--corpus-dir", type=Path, required=True)
    g.add_argument("--table", type=Path, required=True)
    g.add_argument("--condition", type=Path)
    g.add_argument("--cond-dim", type=int, default=256)
    g.add_argument("--time-dim", type=int, default=16)
    g.add_argument("--hidden", default="256,256")
    g.add_argument("--steps", type=int, default=500)
    g.add_argument("--batch-size", type=int, default=32)
    g.add_argument("--lr", type=float, default=1e-3)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", type=Path, required=True)
    g.set_defaults(func=cmd_train_score)

    g = sub.add_parser("sample", help="reverse-SDE sampling from the average voice")
    schedule_flags(g)
    g.add_argument("--xbar", type=Path, required=True)
    src = g.add_mutually_exclusive_group(required=True)
    src.add_argument("--model-scorenet", type=Path)
    src.add_argument("--oracle-x0", type=Path)
    g.add_argument("--condition", type=Path)
    g.add_argument("--steps", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--paths", type=int, default=1, help="average this many independent paths")
    g.add_argument("--out", type=Path, required=True)
    g.set_defaults(func=cmd_sample)

    g = sub.add_parser("eval-sweep", help="similarity-vs-intensity monotonicity report")
    g.add_argument("--model", type=Path, required=True)
    g.add_argument("--data", type=Path, required=True, help="directory written by gen-data")
    g.add_argument("--grid", default="0:1:0.2")
    g.add_argument("--controls", type=int, default=0, help="random-direction control trials")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", type=Path, required=True)
    g.set_defaults(func=cmd_eval_sweep)

    g = sub.add_parser("avg-phoneme", help="corpus-wide per-phoneme average Mel table")
    g.add_argument("--corpus-dir", type=Path, required=True)
    g.add_argument("--out", type=Path, required=True)
    g.set_defaults(func=cmd_avg_phoneme)

    g = sub.add_parser("substitute", help="replace frames by their phoneme averages")
    g.add_argument("--mel", type=Path, required=True)
    g.add_argument("--align", type=Path, required=True)
    g.add_argument("--table", type=Path, required=True)
    g.add_argument("--out", type=Path, required=True)
    g.set_defaults(func=cmd_substitute)
    return p


def _fail(command: str, exc: Exception) -> str:
    msg = " ".join(str(exc).split())
    return f"emoreg {command}: error [{type(exc).__name__}]: {msg}"


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(_fail(args.command, exc), file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(_fail(args.command, exc), file=sys.stderr)
        return 3
    except (FileNotFoundError, IsADirectoryError, NotADirectoryError) as exc:
        print(_fail(args.command, exc), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
