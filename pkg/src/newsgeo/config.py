"""JSON run configuration and backend construction.

Relative paths in a config file resolve against the file's directory.
Secrets never live here: tokens come from SKY_AGENT_TOKEN / SKY_GEOCODE_TOKEN.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

from .agents import (
    OracleVerifier,
    RelevanceArticleAgent,
    RemoteArticleAgent,
    RemoteCaptioner,
    RemoteChatBackend,
    RemoteVerifier,
    ScriptedArticleAgent,
    TemplateCaptioner,
    load_fixture,
)
from .clients import GazetteerGeocoder, HttpGeocoder, HttpImageryCatalog, SyntheticImagery, load_planted_events
from .errors import NewsGeoError
from .extraction import Gazetteer, GazetteerExtractor, load_gazetteer
from .pipeline import Backends, PipelineConfig


class ConfigError(NewsGeoError):
    pass


DEFAULTS = {
    "max_attempts": 5,
    "method": "agentic",
    "concurrency": 1,
    "seed": 0,
    "timeline_pad_days": 30,
    "requeue_infra_errors": False,
    "gazetteer": None,
    "planted_events": None,
    "output_dir": None,
    "imagery_source": "synthetic",
    "geocoder": {"backend": "gazetteer", "url": None, "timeout": 10.0, "retries": 1, "max_in_flight": 4},
    "imagery": {
        "backend": "synthetic",
        "cadence_days": 7,
        "radius_deg": 0.05,
        "url": None,
        "window_deg": 0.05,
        "limit": 100,
        "timeout": 30.0,
        "retries": 1,
        "max_in_flight": 4,
        "download_dir": None,
    },
    "agents": {
        "article": "relevance",
        "verifier": "oracle",
        "captioner": "template",
        "fixture": None,
        "endpoint": None,
        "model": None,
        "timeout": 60.0,
        "retries": 1,
        "max_in_flight": 4,
        "attach_images": False,
        "prompts_dir": None,
    },
}

_PATH_KEYS = {("gazetteer",), ("planted_events",), ("output_dir",), ("imagery", "download_dir"),
              ("agents", "fixture"), ("agents", "prompts_dir")}
_CHOICES = {
    ("geocoder", "backend"): ("gazetteer", "http"),
    ("imagery", "backend"): ("synthetic", "http"),
    ("agents", "article"): ("relevance", "scripted", "remote"),
    ("agents", "verifier"): ("oracle", "remote"),
    ("agents", "captioner"): ("template", "remote"),
}


def _merge(base: dict, override: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if k not in base:
            raise ConfigError(f"unknown config key {where + k!r}")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ConfigError(f"config key {where + k!r} must be an object")
            out[k] = _merge(base[k], v, f"{where}{k}.")
        else:
            out[k] = v
    return out


def load_config(path=None, overrides: dict | None = None) -> dict:
    """Defaults <- config file <- overrides (e.g. CLI flags)."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        p = Path(path)
        try:
            raw = json.loads(p.read_text(encoding="utf-8"))
        except (OSError, ValueError) as e:
            raise ConfigError(f"cannot read config {p}: {e}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
        cfg = _merge(cfg, raw)
        for keys in _PATH_KEYS:
            node = cfg
            for k in keys[:-1]:
                node = node[k]
            if node[keys[-1]]:
                node[keys[-1]] = str((p.parent / node[keys[-1]]).resolve())
    if overrides:
        cfg = _merge(cfg, {k: v for k, v in overrides.items() if v is not None})
    for (section, key), allowed in _CHOICES.items():
        if cfg[section][key] not in allowed:
            raise ConfigError(f"{section}.{key} must be one of {', '.join(allowed)}")
    return cfg


def pipeline_config(cfg: dict) -> PipelineConfig:
    try:
        return PipelineConfig(
            max_attempts=cfg["max_attempts"],
            method=cfg["method"],
            concurrency=cfg["concurrency"],
            seed=cfg["seed"],
            timeline_pad_days=cfg["timeline_pad_days"],
            requeue_infra_errors=cfg["requeue_infra_errors"],
        )
    except ValueError as e:
        raise ConfigError(str(e)) from None


@dataclass
class Runtime:
    config: PipelineConfig
    backends: Backends
    gazetteer: Gazetteer


def build_runtime(cfg: dict) -> Runtime:
    if not cfg["gazetteer"]:
        raise ConfigError("config needs a 'gazetteer' path (place extraction uses it)")
    gaz = load_gazetteer(cfg["gazetteer"])
    extractor = GazetteerExtractor(gaz)

    g = cfg["geocoder"]
    if g["backend"] == "http":
        if not g["url"]:
            raise ConfigError("geocoder.url is required for the http backend")
        geocoder = HttpGeocoder(g["url"], timeout=g["timeout"], retries=g["retries"], max_in_flight=g["max_in_flight"])
    else:
        geocoder = GazetteerGeocoder(gaz)

    im = cfg["imagery"]
    if im["backend"] == "http":
        if not im["url"]:
            raise ConfigError("imagery.url is required for the http backend")
        imagery = HttpImageryCatalog(
            im["url"], window_deg=im["window_deg"], limit=im["limit"], timeout=im["timeout"],
            retries=im["retries"], max_in_flight=im["max_in_flight"], download_dir=im["download_dir"],
        )
    else:
        events = load_planted_events(cfg["planted_events"]) if cfg["planted_events"] else []
        imagery = SyntheticImagery(cfg["seed"], tuple(events), im["cadence_days"], im["radius_deg"])

    a = cfg["agents"]
    fixture = load_fixture(a["fixture"]) if a["fixture"] else {}
    remote = None
    if "remote" in (a["article"], a["verifier"], a["captioner"]):
        if not a["endpoint"] or not a["model"]:
            raise ConfigError("agents.endpoint and agents.model are required for remote agents")
        remote = RemoteChatBackend(
            a["endpoint"], a["model"], timeout=a["timeout"], retries=a["retries"],
            max_in_flight=a["max_in_flight"], attach_images=a["attach_images"], prompts_dir=a["prompts_dir"],
        )
    if a["article"] == "scripted":
        if not a["fixture"]:
            raise ConfigError("agents.fixture is required for the scripted article agent")
        article_agent = ScriptedArticleAgent(fixture)
    elif a["article"] == "remote":
        article_agent = RemoteArticleAgent(remote)
    else:
        article_agent = RelevanceArticleAgent(extractor)
    verifier = RemoteVerifier(remote) if a["verifier"] == "remote" else OracleVerifier(fixture)
    captioner = RemoteCaptioner(remote) if a["captioner"] == "remote" else TemplateCaptioner(fixture)

    return Runtime(pipeline_config(cfg), Backends(geocoder, imagery, article_agent, verifier, captioner, extractor), gaz)
