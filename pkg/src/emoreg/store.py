"""Save/load fitted models as manifest directories (see :mod:`emoreg.tensorio`)."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .diffusion.schedule import DEFAULT_T_MIN, NoiseSchedule
from .diffusion.scorenet import ScoreNet
from .dvm import DvmModel
from .errors import ManifestError
from .gmm import GmmModel
from .labels import TARGET_EMOTIONS, Emotion
from .melproc import PhonemeTable
from .pca import PcaModel
from .tensorio import load_manifest, save_manifest


def save_gmm(model: GmmModel, directory, emotion: Emotion | None = None) -> Path:
    meta = {"k": model.k, "dim": model.dim, "seed": model.seed, "iterations": model.n_iter,
            "final_log_likelihood": model.final_log_likelihood, "converged": model.converged,
            "log_likelihood_trace": list(model.log_likelihood_trace)}
    if emotion is not None:
        meta["emotion"] = Emotion.parse(emotion).value
    return save_manifest(directory, "gmm", meta, {
        "weights": model.weights[None, :], "means": model.means, "covariances": model.covariances})


def load_gmm(path) -> GmmModel:
    man, m = load_manifest(path, "gmm")
    md = man.metadata
    return GmmModel(weights=m["weights"].astype(np.float64).ravel(), means=m["means"].astype(np.float64),
                    covariances=m["covariances"].astype(np.float64),
                    log_likelihood_trace=tuple(md.get("log_likelihood_trace", [md["final_log_likelihood"]])),
                    seed=int(md["seed"]), n_iter=int(md["iterations"]), converged=bool(md.get("converged", False)))


def save_pca(model: PcaModel, directory) -> Path:
    meta = {"dim": model.dim, "n_components": model.n_components,
            "total_variance": model.total_variance,
            "explained_variance_ratio": model.explained_variance_ratio}
    return save_manifest(directory, "pca", meta, {
        "mean": model.mean[None, :], "components": model.components,
        "eigenvalues": model.eigenvalues[None, :]})


def load_pca(path) -> PcaModel:
    man, m = load_manifest(path, "pca")
    return PcaModel(mean=m["mean"].astype(np.float64).ravel(),
                    components=m["components"].astype(np.float64),
                    eigenvalues=m["eigenvalues"].astype(np.float64).ravel(),
                    total_variance=float(man.metadata["total_variance"]))


def save_dvm(model: DvmModel, directory) -> Path:
    directory = Path(directory)
    subs = {}
    for target, pca in model.pcas.items():
        name = f"pca_{target.value.lower()}"
        save_pca(pca, directory / name)
        subs[target.value] = f"{name}/manifest.json"
    gmms = {}
    for emotion, gmm in model.gmms.items():
        name = f"gmm_{emotion.value.lower()}"
        save_gmm(gmm, directory / name, emotion)
        gmms[emotion.value] = f"{name}/manifest.json"
    meta = {"dim": model.dim, "n_components": model.metadata.get("n_components"),
            "targets": [t.value for t in model.pcas], "source": Emotion.NEUTRAL.value,
            "gmm_k": model.metadata.get("gmm_k"), "gmm_seeds": model.metadata.get("gmm_seeds", {}),
            "submodels": subs, "gmms": gmms}
    return save_manifest(directory, "dvm", meta, {})


def load_dvm(path) -> DvmModel:
    path = Path(path)
    man, _ = load_manifest(path, "dvm")
    root = path if path.is_dir() else path.parent
    pcas = {}
    for name, rel in man.metadata["submodels"].items():
        pcas[Emotion.parse(name)] = load_pca(root / rel)
    missing = [t.value for t in TARGET_EMOTIONS if t not in pcas]
    if missing:
        raise ManifestError(f"dvm manifest lacks PCA submodels for {missing}")
    meta = {k: man.metadata[k] for k in ("gmm_k", "gmm_seeds", "n_components")}
    return DvmModel(pcas=pcas, dim=int(man.metadata["dim"]), metadata=meta)


def save_schedule(s: NoiseSchedule, directory, t_min: float = DEFAULT_T_MIN) -> Path:
    return save_manifest(directory, "schedule", {"beta0": s.beta0, "beta1": s.beta1, "t_min": t_min}, {})


def load_schedule(path) -> tuple[NoiseSchedule, float]:
    man, _ = load_manifest(path, "schedule")
    md = man.metadata
    return NoiseSchedule(float(md["beta0"]), float(md["beta1"])), float(md["t_min"])


def save_scorenet(net: ScoreNet, directory, extra: dict | None = None) -> Path:
    meta = {"channels": net.channels, "cond_dim": net.cond_dim, "time_dim": net.time_dim,
            "hidden": list(net.hidden), "layer_shapes": [list(s) for s in net.layer_shapes],
            "n_params": net.n_params, **(extra or {})}
    mats = {}
    for i, (w, b) in enumerate(net.params):
        mats[f"w{i}"] = w
        mats[f"b{i}"] = b[None, :]
    return save_manifest(directory, "scorenet", meta, mats)


def load_scorenet(path) -> ScoreNet:
    man, m = load_manifest(path, "scorenet")
    md = man.metadata
    n_layers = len(md["layer_shapes"])
    try:
        params = [(m[f"w{i}"].astype(np.float64), m[f"b{i}"].astype(np.float64).ravel())
                  for i in range(n_layers)]
    except KeyError as exc:
        raise ManifestError(f"scorenet manifest lacks matrix {exc}") from None
    return ScoreNet(int(md["channels"]), int(md["cond_dim"]), int(md["time_dim"]),
                    tuple(md["hidden"]), params=params)


def save_phoneme_table(table: PhonemeTable, directory) -> Path:
    meta = {"phonemes": list(table.phonemes), "counts": list(table.counts), "channels": table.channels}
    return save_manifest(directory, "phoneme-table", meta, {"averages": table.averages})


def load_phoneme_table(path) -> PhonemeTable:
    man, m = load_manifest(path, "phoneme-table")
    md = man.metadata
    return PhonemeTable(tuple(md["phonemes"]), m["averages"].astype(np.float64), tuple(md["counts"]))
