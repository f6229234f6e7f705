"""Model-service assessor with an on-disk replay cache.

Techniques are sent to the service in batches; each (technique, dataset)
answer is cached individually under a key derived from the model name and
the single-technique rendering of the prompt, so replays do not depend on
how a previous run happened to batch its requests.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import tempfile
import threading
import time
import urllib.error
import urllib.request
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Sequence

from ..dataset_kb import DatasetProfile
from ..errors import MalformedResponse, ServiceUnavailable
from ..stix_ingest import TechniqueRecord
from .scoring import (
    CRITERIA,
    DEFAULT_THRESHOLDS,
    AssessmentRecord,
    CoverageLabel,
    CriteriaVector,
    LabelThresholds,
    make_record,
)

log = logging.getLogger(__name__)

TEMPLATE_VERSION = "v1"

PROMPT_HEADER = """\
You are judging whether a network intrusion detection dataset can be used to
train and test detectors for particular MITRE ATT&CK techniques.

Dataset profile:
{dataset_profile}

For every technique listed below, answer each question with exactly one word:
yes, no, or unknown.
Q1. Does the dataset include attacks of the same type as this technique?
Q2. Is the network protocol this technique depends on captured in the dataset?
Q3. Does the dataset come from the same operational environment as the technique (enterprise IT or industrial OT)?
Q4. Do the dataset's features (packets, flows, process values) carry what a detector needs to spot this technique?
Q5. Are there enough labelled instances of this kind of attack, beyond a token sample?

Reply with one block per technique and no other text, exactly like this:
TECHNIQUE <technique id>
Q1: <yes|no|unknown>
Q2: <yes|no|unknown>
Q3: <yes|no|unknown>
Q4: <yes|no|unknown>
Q5: <yes|no|unknown>
"""

TECHNIQUE_SECTION = """\

TECHNIQUE {technique_id}
Name: {technique_name}
Description: {technique_description}
"""


def template_hash() -> str:
    blob = f"{TEMPLATE_VERSION}\0{PROMPT_HEADER}\0{TECHNIQUE_SECTION}"
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def profile_as_text(profile: DatasetProfile) -> str:
    def joined(items):
        return ", ".join(items) if items else "none"

    return "\n".join(
        [
            f"- Name: {profile.name} ({profile.year})",
            f"- Domain: {profile.domain.value}",
            f"- Industrial protocols: {joined(profile.industrial_protocols)}",
            f"- Enterprise protocols: {joined(profile.enterprise_protocols)}",
            f"- Attack classes: {joined(profile.attack_classes)}",
            f"- Attack scenarios: {profile.scenario_count}",
            f"- Feature granularity: {profile.feature_granularity.value}",
            f"- Known limitations: {joined(profile.limitations)}",
        ]
    )


def render_prompt(techniques: Sequence[TechniqueRecord], profile: DatasetProfile) -> str:
    parts = [PROMPT_HEADER.format(dataset_profile=profile_as_text(profile))]
    for t in techniques:
        parts.append(
            TECHNIQUE_SECTION.format(
                technique_id=t.attack_id,
                technique_name=t.name,
                technique_description=" ".join(t.description.split()) or "(none)",
            )
        )
    return "".join(parts)


def cache_key(model_name: str, technique: TechniqueRecord, profile: DatasetProfile) -> str:
    prompt = render_prompt([technique], profile)
    return hashlib.sha256(f"{model_name}\0{prompt}".encode()).hexdigest()


_BLOCK_RE = re.compile(r"^TECHNIQUE\s+(T\d{4}(?:\.\d{3})?)$")
_ANSWER_RE = re.compile(r"^Q([1-5]):\s*(yes|no|unknown)$", re.IGNORECASE)


def parse_response(text: str) -> dict[str, CriteriaVector | None]:
    """Parse the strict block format.

    Returns technique id -> answers, with ``None`` for a block that is
    present but broken (wrong question order, bad answer word, repeated id).
    Raises MalformedResponse when the text as a whole does not follow the
    format.
    """
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines:
        raise MalformedResponse("empty response")

    blocks: list[tuple[str, list[str]]] = []
    for line in lines:
        block = _BLOCK_RE.match(line)
        if block:
            blocks.append((block.group(1), []))
        elif not blocks:
            raise MalformedResponse(f"text outside any TECHNIQUE block: {line[:60]!r}")
        else:
            blocks[-1][1].append(line)

    parsed: dict[str, CriteriaVector | None] = {}
    for attack_id, body in blocks:
        answers = [_ANSWER_RE.match(ln) for ln in body]
        ok = (
            attack_id not in parsed
            and len(answers) == len(CRITERIA)
            and all(m is not None and int(m.group(1)) == i for i, m in enumerate(answers, 1))
        )
        parsed[attack_id] = CriteriaVector.of(m.group(2).capitalize() for m in answers) if ok else None
    return parsed


@dataclass(frozen=True)
class ModelServiceConfig:
    endpoint: str
    model_name: str
    adapter: str = "generic"
    temperature: float = 0.1
    batch_size: int = 5
    max_retries: int = 3
    rate_limit_requests: int = 50
    rate_limit_window: float = 60.0
    cache_dir: str = ".auditor-cache"
    api_key_env: str = "AUDITOR_API_KEY"
    timeout: float = 60.0
    backoff_base: float = 1.0
    max_workers: int = 1
    max_tokens: int = 1024

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.rate_limit_requests < 1 or self.rate_limit_window <= 0:
            raise ValueError("rate limit must allow at least one request per positive window")
        if self.adapter not in ADAPTERS:
            raise ValueError(f"unknown adapter {self.adapter!r}; known: {sorted(ADAPTERS)}")

    @property
    def assessor_id(self) -> str:
        return f"remote/{self.model_name}"

    def to_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ModelServiceConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})


# --- provider adapters: (config, prompt, api_key) -> (headers, body); response -> text


def _generic_request(cfg: ModelServiceConfig, prompt: str, key: str | None):
    headers = {"Authorization": f"Bearer {key}"} if key else {}
    return headers, {"model": cfg.model_name, "temperature": cfg.temperature, "prompt": prompt}


def _generic_text(resp: dict) -> str:
    return resp["text"]


def _anthropic_request(cfg: ModelServiceConfig, prompt: str, key: str | None):
    headers = {"anthropic-version": "2023-06-01"}
    if key:
        headers["x-api-key"] = key
    body = {
        "model": cfg.model_name,
        "max_tokens": cfg.max_tokens,
        "temperature": cfg.temperature,
        "messages": [{"role": "user", "content": prompt}],
    }
    return headers, body


def _anthropic_text(resp: dict) -> str:
    return "".join(block.get("text", "") for block in resp["content"] if block.get("type") == "text")


def _openai_request(cfg: ModelServiceConfig, prompt: str, key: str | None):
    headers = {"Authorization": f"Bearer {key}"} if key else {}
    body = {
        "model": cfg.model_name,
        "temperature": cfg.temperature,
        "messages": [{"role": "user", "content": prompt}],
    }
    return headers, body


def _openai_text(resp: dict) -> str:
    return resp["choices"][0]["message"]["content"]


ADAPTERS: dict[str, tuple[Callable, Callable]] = {
    "generic": (_generic_request, _generic_text),
    "anthropic": (_anthropic_request, _anthropic_text),
    "openai": (_openai_request, _openai_text),
}

Transport = Callable[[str, dict, dict, float], dict]


def http_transport(url: str, headers: dict, body: dict, timeout: float) -> dict:
    data = json.dumps(body).encode()
    req = urllib.request.Request(
        url, data=data, method="POST", headers={"Content-Type": "application/json", **headers}
    )
    try:
        with urllib.request.urlopen(req, timeout=timeout) as resp:
            return json.loads(resp.read())
    except urllib.error.HTTPError as exc:
        raise ServiceUnavailable(f"HTTP {exc.code} from {url}") from None
    except (urllib.error.URLError, TimeoutError, OSError) as exc:
        raise ServiceUnavailable(f"cannot reach {url}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise MalformedResponse(f"non-JSON response body: {exc}") from None


class RateLimiter:
    """At most ``requests`` acquisitions in any sliding ``window`` seconds."""

    def __init__(self, requests: int, window: float, clock=time.monotonic, sleep=time.sleep):
        self.requests = requests
        self.window = window
        self._clock = clock
        self._sleep = sleep
        self._stamps: deque[float] = deque()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        with self._lock:
            while True:
                now = self._clock()
                while self._stamps and now - self._stamps[0] >= self.window:
                    self._stamps.popleft()
                if len(self._stamps) < self.requests:
                    self._stamps.append(now)
                    return
                self._sleep(self.window - (now - self._stamps[0]))


class ResponseCache:
    """Append-only directory of JSON records, one file per key."""

    def __init__(self, cache_dir):
        self.root = Path(cache_dir)

    def _path(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def get(self, key: str) -> AssessmentRecord | None:
        path = self._path(key)
        if not path.exists():
            return None
        with open(path, encoding="utf-8") as fh:
            return AssessmentRecord.from_dict(json.load(fh))

    def put(self, key: str, record: AssessmentRecord) -> None:
        path = self._path(key)
        if path.exists():
            return
        self.root.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=self.root, prefix=".tmp-", suffix=".json")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(record.to_dict(), fh, sort_keys=True, indent=1)
        os.replace(tmp, path)

    def archive_raw(self, text: str) -> str:
        digest = hashlib.sha256(text.encode()).hexdigest()
        raw_dir = self.root / "raw"
        raw_dir.mkdir(parents=True, exist_ok=True)
        target = raw_dir / f"{digest}.txt"
        if not target.exists():
            fd, tmp = tempfile.mkstemp(dir=raw_dir, prefix=".tmp-")
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(text)
            os.replace(tmp, target)
        return str(target)


def _placeholder(
    technique: TechniqueRecord, profile: DatasetProfile, assessor_id: str, key: str, flag: str, why: str
) -> AssessmentRecord:
    criteria = CriteriaVector()
    return AssessmentRecord(
        technique.attack_id,
        profile.name,
        assessor_id,
        criteria,
        0.0,
        CoverageLabel.UNKNOWN,
        rationale=why,
        cache_key=key,
        flags=(flag,),
    )


@dataclass
class RemoteAssessor:
    config: ModelServiceConfig
    transport: Transport = http_transport
    thresholds: LabelThresholds = DEFAULT_THRESHOLDS
    sleep: Callable[[float], None] = time.sleep
    clock: Callable[[], float] = time.monotonic
    request_log: list[dict[str, Any]] = field(default_factory=list)

    def __post_init__(self):
        self.cache = ResponseCache(self.config.cache_dir)
        self.limiter = RateLimiter(
            self.config.rate_limit_requests, self.config.rate_limit_window, self.clock, self.sleep
        )
        self._log_lock = threading.Lock()

    def _send(self, prompt: str, batch_ids: list[str], dataset: str) -> str:
        build, extract = ADAPTERS[self.config.adapter]
        headers, body = build(self.config, prompt, os.environ.get(self.config.api_key_env))
        last: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            self.limiter.acquire()
            with self._log_lock:
                self.request_log.append({"dataset": dataset, "techniques": batch_ids, "attempt": attempt})
            try:
                response = self.transport(self.config.endpoint, headers, body, self.config.timeout)
                try:
                    return extract(response)
                except (KeyError, IndexError, TypeError) as exc:
                    raise MalformedResponse(f"unexpected response shape: {exc!r}") from None
            except ServiceUnavailable as exc:
                last = exc
                if attempt < self.config.max_retries:
                    delay = self.config.backoff_base * 2**attempt
                    log.warning("request failed (%s); retrying in %.1fs", exc, delay)
                    self.sleep(delay)
        raise ServiceUnavailable(f"giving up after {self.config.max_retries + 1} attempts: {last}")

    def _assess_batch(
        self, batch: list[tuple[TechniqueRecord, str]], profile: DatasetProfile
    ) -> list[AssessmentRecord]:
        aid = self.config.assessor_id
        ids = [t.attack_id for t, _ in batch]
        try:
            text = self._send(render_prompt([t for t, _ in batch], profile), ids, profile.name)
        except ServiceUnavailable as exc:
            log.error("service unavailable for %s on %s: %s", ids, profile.name, exc)
            return [_placeholder(t, profile, aid, k, "unassessed", str(exc)) for t, k in batch]
        except MalformedResponse as exc:
            return [_placeholder(t, profile, aid, k, "malformed", str(exc)) for t, k in batch]

        try:
            parsed = parse_response(text)
        except MalformedResponse as exc:
            raw = self.cache.archive_raw(text)
            return [_placeholder(t, profile, aid, k, "malformed", f"{exc}; raw: {raw}") for t, k in batch]

        out = []
        raw = None
        for technique, key in batch:
            criteria = parsed.get(technique.attack_id)
            if criteria is None:
                raw = raw or self.cache.archive_raw(text)
                out.append(_placeholder(technique, profile, aid, key, "malformed", f"no valid block; raw: {raw}"))
                continue
            record = make_record(
                technique.attack_id,
                profile.name,
                aid,
                criteria,
                self.thresholds,
                rationale=f"{self.config.model_name} template {TEMPLATE_VERSION}",
                cache_key=key,
            )
            self.cache.put(key, record)
            out.append(record)
        return out

    def assess(self, techniques: Sequence[TechniqueRecord], profile: DatasetProfile) -> list[AssessmentRecord]:
        """Records in the order of ``techniques``; cached pairs are never re-sent."""
        results: dict[str, AssessmentRecord] = {}
        pending: list[tuple[TechniqueRecord, str]] = []
        for t in techniques:
            key = cache_key(self.config.model_name, t, profile)
            hit = self.cache.get(key)
            if hit is not None:
                results[t.attack_id] = hit
            else:
                pending.append((t, key))

        size = self.config.batch_size
        batches = [pending[i : i + size] for i in range(0, len(pending), size)]
        if self.config.max_workers > 1 and len(batches) > 1:
            with ThreadPoolExecutor(self.config.max_workers) as pool:
                chunks = list(pool.map(lambda b: self._assess_batch(b, profile), batches))
        else:
            chunks = [self._assess_batch(b, profile) for b in batches]
        for chunk in chunks:
            for rec in chunk:
                results[rec.attack_id] = rec
        return [results[t.attack_id] for t in techniques]


def assess_remote(
    techniques: Sequence[TechniqueRecord],
    profile: DatasetProfile,
    config: ModelServiceConfig,
    transport: Transport = http_transport,
) -> list[AssessmentRecord]:
    return RemoteAssessor(config, transport).assess(techniques, profile)
