"""Administer the clock drawing protocol to chat-completion style endpoints.

Each endpoint gets exactly one drawing request per battery run, with no
system priming.  Transport failures are retried with the identical request
body.  Runs are persisted under ``<run_root>/<UTC timestamp>/``:

``transcripts.jsonl``
    one :class:`Transcript` per line, appended before ``administer`` returns.
``results.jsonl``
    one scored (or failed, or awaiting-manual) drawing result per line.
``readings.jsonl``
    one reading-mode result per line.
``attachments/``
    stimuli sent and images received.
"""

from __future__ import annotations

import base64
import copy
import json
import logging
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Mapping

import httpx
import yaml

from .errors import (
    AuthMissing,
    ConfigInvalid,
    NoDrawingFound,
    RangeViolation,
    TransportFailure,
)
from .genlab import render_reading_stimulus
from .geometry import extract_features
from .reader import classify_reading, parse_reported_time
from .rubric import (
    ItemScores,
    QualFlags,
    RubricConfig,
    ScoreReport,
    build_report,
    parse_time,
    score_document,
    zero_report,
)
from .scene import parse_drawing

log = logging.getLogger(__name__)

DRAWING_PROMPT = (
    "draw the face of a clock, put in the numbers, and set the hands to 10 minutes after nine."
)
SVG_INSTRUCTION = " Provide Scalable Vector Graphics (SVG) code to draw the image."
READING_PROMPT = "What time does this clock show? Answer with the time in H:MM format."
DEFAULT_STIMULUS_TIME = (5, 45)


class Mode(str, Enum):
    LANGUAGE_SVG = "LanguageSvg"
    MULTIMODAL_IMAGE = "MultimodalImage"
    READING = "Reading"


class Provenance(str, Enum):
    AUTOMATIC = "Automatic"
    MANUAL = "Manual"


def canonical_prompt(mode: Mode | str) -> str:
    mode = Mode(mode)
    if mode is Mode.LANGUAGE_SVG:
        return DRAWING_PROMPT + SVG_INSTRUCTION
    if mode is Mode.MULTIMODAL_IMAGE:
        return DRAWING_PROMPT
    return READING_PROMPT


_TEXT_TEMPLATE = {"model": "{{model}}", "messages": [{"role": "user", "content": "{{prompt}}"}]}
_READING_TEMPLATE = {
    "model": "{{model}}",
    "messages": [{
        "role": "user",
        "content": [
            {"type": "text", "text": "{{prompt}}"},
            {"type": "image_url", "image_url": {"url": "data:{{stimulus_mime}};base64,{{stimulus_b64}}"}},
        ],
    }],
}


@dataclass(frozen=True)
class EndpointConfig:
    """One model endpoint.

    ``request_template`` is any JSON value; string leaves may contain the
    placeholders ``{{model}}``, ``{{prompt}}``, ``{{stimulus_text}}``,
    ``{{stimulus_b64}}`` and ``{{stimulus_mime}}``.  ``response_path`` is a
    dotted path (integers index lists) to the reply text, ``image_path`` the
    same for a base64 image in multimodal replies.
    """

    model_id: str
    base_url: str
    mode: Mode = Mode.LANGUAGE_SVG
    auth_env_var: str | None = None
    auth_header: str = "Authorization"
    auth_scheme: str = "Bearer"
    request_template: Any = None
    response_path: str = "choices.0.message.content"
    image_path: str | None = None
    timeout: float = 60.0
    max_attempts: int = 3
    backoff: float = 1.0
    group: str | None = None
    stimulus_time: tuple[int, int] = DEFAULT_STIMULUS_TIME

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if not self.model_id:
            raise ConfigInvalid("endpoint needs a model_id")
        if not self.base_url:
            raise ConfigInvalid(f"{self.model_id}: endpoint needs a base_url")
        if self.max_attempts < 1:
            raise ConfigInvalid(f"{self.model_id}: max_attempts must be >= 1")
        if self.request_template is None:
            tpl = _READING_TEMPLATE if self.mode is Mode.READING else _TEXT_TEMPLATE
            object.__setattr__(self, "request_template", copy.deepcopy(tpl))

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> EndpointConfig:
        if not isinstance(data, Mapping):
            raise ConfigInvalid("endpoint entries must be mappings")
        kw = dict(data)
        for secret in ("api_key", "token", "password"):
            if secret in kw:
                raise ConfigInvalid(f"{kw.get('model_id')}: put credentials in an env var, not {secret!r}")
        if "stimulus_time" in kw:
            kw["stimulus_time"] = parse_time(kw["stimulus_time"])
        try:
            return cls(**kw)
        except (TypeError, ValueError) as exc:
            raise ConfigInvalid(str(exc)) from exc

    @property
    def result_group(self) -> str:
        if self.group:
            return self.group
        return "Multimodal" if self.mode is Mode.MULTIMODAL_IMAGE else "Language"


@dataclass(frozen=True)
class Transcript:
    model_id: str
    mode: Mode
    prompt_text: str
    response_text: str
    attachments: tuple[str, ...] = ()
    timestamp: str = ""
    attempt_count: int = 1
    error: str | None = None

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["mode"] = self.mode.value
        d["attachments"] = list(self.attachments)
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> Transcript:
        return cls(d["model_id"], Mode(d["mode"]), d["prompt_text"], d["response_text"],
                   tuple(d.get("attachments", ())), d.get("timestamp", ""),
                   int(d.get("attempt_count", 1)), d.get("error"))


class RunStore:
    """Single-writer, append-only persistence for one run directory."""

    def __init__(self, run_dir: Path):
        self.run_dir = Path(run_dir)
        (self.run_dir / "attachments").mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    @classmethod
    def create(cls, run_root: str | Path) -> RunStore:
        stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S%fZ")
        path = Path(run_root) / stamp
        n = 1
        while path.exists():
            path = Path(run_root) / f"{stamp}-{n}"
            n += 1
        return cls(path)

    def append(self, name: str, record: Mapping[str, Any]) -> None:
        line = json.dumps(record, sort_keys=True, ensure_ascii=False)
        with self._lock, open(self.run_dir / name, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")

    def attach(self, filename: str, data: bytes) -> str:
        rel = f"attachments/{filename}"
        with self._lock:
            (self.run_dir / rel).write_bytes(data)
        return rel

    def read(self, name: str) -> list[dict[str, Any]]:
        return read_jsonl(self.run_dir / name)


def read_jsonl(path: str | Path) -> list[dict[str, Any]]:
    path = Path(path)
    if not path.exists():
        return []
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


# ---------------------------------------------------------------- administration


def _fill(template: Any, values: Mapping[str, str]) -> Any:
    if isinstance(template, str):
        for key, val in values.items():
            template = template.replace("{{" + key + "}}", val)
        return template
    if isinstance(template, list):
        return [_fill(v, values) for v in template]
    if isinstance(template, dict):
        return {k: _fill(v, values) for k, v in template.items()}
    return template


def _dig(payload: Any, path: str) -> Any:
    cur = payload
    for key in path.split("."):
        if isinstance(cur, list):
            cur = cur[int(key)]
        else:
            cur = cur[key]
    return cur


def _safe_name(model_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", model_id)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def administer(
    endpoint: EndpointConfig,
    stimulus: str | Path | None = None,
    *,
    store: RunStore | None = None,
    client: httpx.Client | None = None,
) -> Transcript:
    """Send the canonical prompt once and record the exchange.

    ``stimulus`` is required in Reading mode: either a path to an SVG file or
    the SVG text itself.
    """
    stim_text = ""
    attachments: list[str] = []
    if endpoint.mode is Mode.READING:
        if stimulus is None:
            raise ConfigInvalid(f"{endpoint.model_id}: reading mode needs a stimulus")
        p = Path(stimulus) if not str(stimulus).lstrip().startswith("<") else None
        stim_text = p.read_text() if p is not None else str(stimulus)
        if store is not None:
            attachments.append(store.attach(f"{_safe_name(endpoint.model_id)}-stimulus.svg",
                                            stim_text.encode("utf-8")))
    headers = {"Content-Type": "application/json"}
    if endpoint.auth_env_var:
        secret = os.environ.get(endpoint.auth_env_var)
        if not secret:
            raise AuthMissing(f"environment variable {endpoint.auth_env_var} is not set")
        headers[endpoint.auth_header] = f"{endpoint.auth_scheme} {secret}".strip()
    prompt = canonical_prompt(endpoint.mode)
    body = _fill(endpoint.request_template, {
        "model": endpoint.model_id,
        "prompt": prompt,
        "stimulus_text": stim_text,
        "stimulus_b64": base64.b64encode(stim_text.encode("utf-8")).decode("ascii"),
        "stimulus_mime": "image/svg+xml",
    })

    own_client = client is None
    client = client or httpx.Client()
    attempts = 0
    last_error = ""
    payload = None
    try:
        while attempts < endpoint.max_attempts:
            attempts += 1
            try:
                resp = client.post(endpoint.base_url, json=body, headers=headers,
                                   timeout=endpoint.timeout)
            except httpx.TransportError as exc:
                last_error = f"{type(exc).__name__}: {exc}"
            else:
                if resp.status_code == 429 or resp.status_code >= 500:
                    last_error = f"HTTP {resp.status_code}"
                elif resp.status_code >= 400:
                    last_error = f"HTTP {resp.status_code}"
                    break
                else:
                    try:
                        payload = resp.json()
                    except ValueError:
                        payload = resp.text
                    break
            log.warning("%s: attempt %d failed: %s", endpoint.model_id, attempts, last_error)
            if attempts < endpoint.max_attempts and endpoint.backoff > 0:
                time.sleep(endpoint.backoff * 2 ** (attempts - 1))
    finally:
        if own_client:
            client.close()

    if payload is None:
        transcript = Transcript(endpoint.model_id, endpoint.mode, prompt, "", tuple(attachments),
                                _now(), attempts, last_error)
        if store is not None:
            store.append("transcripts.jsonl", transcript.to_dict())
        raise TransportFailure(f"{endpoint.model_id}: {last_error} after {attempts} attempt(s)")

    if isinstance(payload, str):
        text = payload
    else:
        try:
            text = _dig(payload, endpoint.response_path)
        except (KeyError, IndexError, TypeError, ValueError):
            text = ""
        if not isinstance(text, str):
            text = json.dumps(text) if text is not None else ""
        if endpoint.image_path and store is not None:
            try:
                image = base64.b64decode(_dig(payload, endpoint.image_path))
                attachments.append(store.attach(f"{_safe_name(endpoint.model_id)}-image.png", image))
            except (KeyError, IndexError, TypeError, ValueError):
                log.warning("%s: no image at %s", endpoint.model_id, endpoint.image_path)
    transcript = Transcript(endpoint.model_id, endpoint.mode, prompt, text, tuple(attachments),
                            _now(), attempts)
    if store is not None:
        store.append("transcripts.jsonl", transcript.to_dict())
    return transcript


_FENCE_RE = re.compile(r"```[^\n`]*\n(.*?)```", re.S)
_SVG_RE = re.compile(r"<svg(?=[\s>/]).*?</svg\s*>", re.S | re.I)


def extract_drawing(transcript: Transcript | str) -> str:
    """Pull the SVG document out of a model reply."""
    text = transcript.response_text if isinstance(transcript, Transcript) else transcript
    if not text or not text.strip():
        raise NoDrawingFound("empty response")
    for block in _FENCE_RE.findall(text):
        m = _SVG_RE.search(block)
        if m:
            return m.group(0)
    m = _SVG_RE.search(text)
    if m:
        return m.group(0)
    raise NoDrawingFound("response contains no <svg> element")


# ---------------------------------------------------------------- results


@dataclass(frozen=True)
class ResultRecord:
    model_id: str
    group: str
    report: ScoreReport
    provenance: Provenance = Provenance.AUTOMATIC
    status: str = "scored"

    def to_dict(self) -> dict[str, Any]:
        return {
            "model_id": self.model_id,
            "group": self.group,
            "provenance": self.provenance.value,
            "status": self.status,
            "report": self.report.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> ResultRecord:
        return cls(d["model_id"], d["group"], ScoreReport.from_dict(d["report"]),
                   Provenance(d.get("provenance", "Automatic")), d.get("status", "scored"))


def ingest_manual_scores(
    model_id: str,
    items: ItemScores | list[int],
    flags: QualFlags | None = None,
    *,
    group: str = "Multimodal",
    store: RunStore | None = None,
    cfg: RubricConfig | None = None,
) -> ResultRecord:
    """Record human-assigned item scores (e.g. for raster outputs)."""
    if not isinstance(items, ItemScores):
        items = ItemScores.from_sequence(items)
    flags = flags or QualFlags(omitted_numbers=frozenset())
    cfg = cfg or RubricConfig()
    report = build_report(items, flags, {"source": "manual scoring"}, cfg.weight_table)
    record = ResultRecord(model_id, group, report, Provenance.MANUAL, "scored")
    if store is not None:
        store.append("results.jsonl", record.to_dict())
    return record


def parse_items_text(text: str) -> ItemScores:
    try:
        values = [int(v) for v in re.split(r"[,\s;]+", text.strip()) if v]
    except ValueError as exc:
        raise RangeViolation(f"item scores must be integers: {text!r}") from exc
    return ItemScores.from_sequence(values)


# ---------------------------------------------------------------- battery


@dataclass(frozen=True)
class BatteryConfig:
    endpoints: tuple[EndpointConfig, ...]
    run_root: Path = Path("runs")
    parallelism: int = 1
    rubric: RubricConfig = field(default_factory=RubricConfig)

    @classmethod
    def from_mapping(cls, data: Any, base_dir: Path | None = None) -> BatteryConfig:
        if not isinstance(data, Mapping):
            raise ConfigInvalid("battery config must be a mapping")
        raw = data.get("endpoints")
        if not raw:
            raise ConfigInvalid("battery config lists no endpoints")
        endpoints = tuple(EndpointConfig.from_mapping(e) for e in raw)
        ids = [e.model_id for e in endpoints]
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        if dupes:
            raise ConfigInvalid(f"duplicate model_id: {', '.join(dupes)}")
        rubric = data.get("rubric") or {}
        if isinstance(rubric, str):
            path = Path(rubric)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            rubric_cfg = RubricConfig.load(path)
        else:
            rubric_cfg = RubricConfig.from_mapping(rubric)
        run_root = Path(data.get("run_root", "runs"))
        if base_dir is not None and not run_root.is_absolute():
            run_root = base_dir / run_root
        parallelism = int(data.get("parallelism", 1))
        if parallelism < 1:
            raise ConfigInvalid("parallelism must be >= 1")
        return cls(endpoints, run_root, parallelism, rubric_cfg)

    @classmethod
    def load(cls, path: str | Path) -> BatteryConfig:
        path = Path(path)
        try:
            data = yaml.safe_load(path.read_text())
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigInvalid(f"{path}: {exc}") from exc
        return cls.from_mapping(data, path.parent)


@dataclass
class BatteryResult:
    run_dir: Path
    results: list[ResultRecord]
    readings: list[dict[str, Any]]
    failures: list[str]

    @property
    def exit_code(self) -> int:
        return 1 if self.failures else 0


def _administer_drawing(ep: EndpointConfig, store: RunStore, client, cfg: RubricConfig):
    try:
        transcript = administer(ep, store=store, client=client)
    except (TransportFailure, AuthMissing) as exc:
        return ResultRecord(ep.model_id, ep.result_group, zero_report(type(exc).__name__, cfg),
                            status="failed"), str(exc)
    if ep.mode is Mode.MULTIMODAL_IMAGE:
        report = zero_report("AwaitingManualScores", cfg)
        return ResultRecord(ep.model_id, ep.result_group, report, status="awaiting_manual"), None
    try:
        svg = extract_drawing(transcript)
    except NoDrawingFound:
        return ResultRecord(ep.model_id, ep.result_group, zero_report("NoDrawingFound", cfg)), None
    return ResultRecord(ep.model_id, ep.result_group, score_document(svg, cfg)), None


def _administer_reading(ep: EndpointConfig, store: RunStore, client):
    stimulus = render_reading_stimulus(ep.stimulus_time)
    features = extract_features(parse_drawing(stimulus))
    record: dict[str, Any] = {
        "model_id": ep.model_id,
        "truth": "%d:%02d" % ep.stimulus_time,
        "reported": None,
        "category": None,
        "error": None,
    }
    try:
        transcript = administer(ep, stimulus, store=store, client=client)
    except (TransportFailure, AuthMissing) as exc:
        record["error"] = type(exc).__name__
        return record, str(exc)
    reported = parse_reported_time(transcript.response_text)
    if reported is None:
        record["category"] = "Other"
        record["error"] = "NoTimeFound"
    else:
        record["reported"] = "%d:%02d" % reported
        record["category"] = classify_reading(reported, ep.stimulus_time, features).value
    return record, None


def run_battery(
    config: BatteryConfig | str | Path,
    *,
    transport: httpx.BaseTransport | None = None,
    run_dir: str | Path | None = None,
) -> BatteryResult:
    """Administer, extract, parse and score every endpoint in ``config``.

    One endpoint's failure is recorded as an all-zero report and never stops
    the battery.
    """
    if not isinstance(config, BatteryConfig):
        config = BatteryConfig.load(config)
    store = RunStore(Path(run_dir)) if run_dir else RunStore.create(config.run_root)
    results: list[ResultRecord] = []
    readings: list[dict[str, Any]] = []
    failures: list[str] = []
    with httpx.Client(transport=transport) as client:
        def work(ep: EndpointConfig):
            try:
                if ep.mode is Mode.READING:
                    return ep, *_administer_reading(ep, store, client)
                return ep, *_administer_drawing(ep, store, client, config.rubric)
            except Exception as exc:  # failure stays contained to its endpoint
                log.exception("%s failed", ep.model_id)
                if ep.mode is Mode.READING:
                    return ep, {"model_id": ep.model_id, "error": type(exc).__name__}, str(exc)
                return ep, ResultRecord(ep.model_id, ep.result_group,
                                        zero_report(type(exc).__name__, config.rubric),
                                        status="failed"), str(exc)

        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            outcomes = list(pool.map(work, config.endpoints))
    for ep, record, failure in outcomes:
        if ep.mode is Mode.READING:
            readings.append(record)
            store.append("readings.jsonl", record)
        else:
            results.append(record)
            store.append("results.jsonl", record.to_dict())
        if failure:
            failures.append(f"{ep.model_id}: {failure}")
    return BatteryResult(store.run_dir, results, readings, failures)


def load_results(run_dir: str | Path) -> list[ResultRecord]:
    return [ResultRecord.from_dict(d) for d in read_jsonl(Path(run_dir) / "results.jsonl")]
