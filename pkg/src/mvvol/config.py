"""YAML model and simulation configuration documents."""

from pathlib import Path

import numpy as np
import yaml

from .exceptions import InputError, ParseError
from .volcore import ModelParams

MODEL_SECTIONS = {"mean", "variance", "correlation", "innovation", "optimizer"}


def _load(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(str(exc), path=path) from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        line = getattr(getattr(exc, "problem_mark", None), "line", None)
        raise ParseError(f"invalid YAML: {exc}", path=path,
                         line=None if line is None else line + 1) from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ParseError("top level must be a mapping", path=path)
    return doc


def _asset_index(ref, assets):
    if isinstance(ref, bool):
        raise InputError(f"bad asset reference {ref!r}")
    if isinstance(ref, int):
        if not 1 <= ref <= len(assets):
            raise InputError(f"asset number {ref} out of range 1..{len(assets)}")
        return ref - 1
    if ref in assets:
        return list(assets).index(ref)
    raise InputError(f"unknown asset {ref!r}")


def _per_asset(value, assets, name):
    """Scalar, list, or {asset: value} mapping -> list aligned with assets."""
    if isinstance(value, dict):
        out = [None] * len(assets)
        for ref, v in value.items():
            out[_asset_index(ref, assets)] = v
        return out
    if isinstance(value, list):
        if len(value) != len(assets):
            raise InputError(f"{name} needs {len(assets)} entries")
        return value
    return value


class ModelConfig:
    """Parsed model configuration.

    ``estimator(assets)`` validates everything that depends on the data
    dimension and returns an unfitted ``MultivariateGarch``.
    """

    def __init__(self, doc=None):
        doc = dict(doc or {})
        unknown = set(doc) - MODEL_SECTIONS
        if unknown:
            raise InputError(f"unknown configuration sections: {sorted(unknown)}")
        self.doc = doc
        mean = doc.get("mean") or {}
        self.p = int(mean.get("p", 0))
        if self.p < 0:
            raise InputError("mean.p must be non-negative")
        var = doc.get("variance") or {}
        self.leverage = bool(var.get("leverage", False))
        self.igarch = var.get("igarch")
        self.ties = var.get("ties") or {}
        self.fixed = var.get("fixed") or {}
        corr = doc.get("correlation") or {}
        self.m = corr.get("m")
        self.theta = corr.get("theta", "scalar")
        if self.theta not in ("scalar", "diagonal"):
            raise InputError("correlation.theta must be 'scalar' or 'diagonal'")
        inn = doc.get("innovation") or {}
        self.dof = inn.get("dof")
        opt = doc.get("optimizer") or {}
        self.max_iter = int(opt.get("max_iter", 2000))
        self.gtol = float(opt.get("gtol", 1e-5))
        self.ftol = float(opt.get("ftol", 1e-9))

    @classmethod
    def load(cls, path):
        if path is None:
            return cls({})
        try:
            return cls(_load(path))
        except (InputError, TypeError, ValueError) as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(str(exc), path=path) from exc

    def estimator(self, assets):
        from .estimator import MultivariateGarch, ParamMapping

        assets = list(assets)
        k = len(assets)
        ties = {}
        for fam, groups in self.ties.items():
            ties[fam] = [[_asset_index(a, assets) for a in g] for g in groups]
        igarch = None
        if self.igarch is not None:
            flags = _per_asset(self.igarch, assets, "igarch")
            igarch = [bool(f) for f in (flags if isinstance(flags, list) else [flags] * k)]
        fixed = {fam: _per_asset(v, assets, f"fixed.{fam}") for fam, v in self.fixed.items()}
        est = MultivariateGarch(
            leverage=self.leverage, igarch=igarch, ties=ties or None, fixed=fixed or None,
            correlation=self.theta, m=self.m, dof=self.dof, max_iter=self.max_iter,
            gtol=self.gtol, ftol=self.ftol)
        # fail before any computation if the structure is inconsistent
        fixed_all = dict(fixed)
        if self.dof is not None:
            fixed_all["dof"] = float(self.dof)
        ParamMapping(k, np.eye(k), m=self.m, leverage=self.leverage,
                     diagonal=self.theta == "diagonal", ties=ties, igarch=igarch,
                     fixed=fixed_all)
        return est


def load_simulation(path):
    """Parse a simulation document into ``(SimulationConfig kwargs, assets)``."""
    from .baselines import DccEParams

    doc = _load(path)
    try:
        p = dict(doc["params"])
        rbar = np.asarray(p.pop("rbar"), dtype=float)
        k = rbar.shape[0]
        assets = doc.get("assets") or [f"x{i + 1}" for i in range(k)]
        params = ModelParams(rbar=rbar, **p)
        kw = {"params": params, "T": int(doc.get("T", 1000)),
              "kind": doc.get("kind", "proposed"), "burn_in": int(doc.get("burn_in", 500))}
        if "dcc_e" in doc:
            kw["dcc_e"] = DccEParams(**doc["dcc_e"])
        if "shocks" in doc:
            kw["shocks"] = {int(t): v for t, v in doc["shocks"].items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"invalid simulation config: {exc}", path=path) from exc
    return kw, assets
