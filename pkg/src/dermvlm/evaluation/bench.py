"""Response-time benchmark: canonical four-prompt sessions vs a baseline.

Drives a running service over HTTP, measures each reply with a monotonic
clock, and compares order-statistic percentiles against a human-consultation
baseline trace. No numeric baseline is published, so a clearly-synthetic
minutes-scale trace ships as the default fixture; callers can substitute a
measured CSV.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from pathlib import Path

import httpx
import numpy as np

from ..errors import InvalidInputError, ServiceUnreachableError
from ..prompts import CANONICAL_PROMPTS
from .aggregate import nearest_rank


def synthetic_baseline_trace(n: int = 60, seed: int = 0) -> list[float]:
    """Synthetic online-consultation latencies, minutes scale (seconds)."""
    rng = np.random.default_rng(seed)
    return [float(x) for x in rng.lognormal(mean=np.log(300.0), sigma=0.35, size=n)]


def write_trace_csv(samples: list[float], path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["latency_s"])
        for s in samples:
            writer.writerow([f"{s:.6f}"])


def read_trace_csv(path: str | Path) -> list[float]:
    path = Path(path)
    if not path.exists():
        raise InvalidInputError(f"baseline trace not found: {path}")
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise InvalidInputError(f"baseline trace {path} is empty")
    return [float(r["latency_s"]) for r in rows]


@dataclass
class BenchReport:
    rows: list[dict]  # case_id, prompt_index, latency_s
    service: dict[str, float]
    baseline: dict[str, float]
    ratio_p50: float
    timeout_s: float
    all_within_timeout: bool = True
    plot_csv: str = ""

    def as_dict(self) -> dict:
        return {
            "service": self.service,
            "baseline": self.baseline,
            "ratio_p50": self.ratio_p50,
            "timeout_s": self.timeout_s,
            "all_within_timeout": self.all_within_timeout,
            "n_replies": len(self.rows),
        }


def _percentiles(samples: list[float]) -> dict[str, float]:
    return {
        "p50": nearest_rank(samples, 0.50),
        "p90": nearest_rank(samples, 0.90),
        "p99": nearest_rank(samples, 0.99),
    }


def latency_bench(
    base_url: str,
    cases: list[tuple[str, bytes]],
    baseline: list[float],
    timeout_s: float = 30.0,
    client: httpx.Client | None = None,
    prompts: tuple[str, ...] = CANONICAL_PROMPTS,
) -> BenchReport:
    """Run every case through all four prompts sequentially, one at a time.

    ``cases`` holds (case_id, PNG/JPEG bytes). Requests are serialized to
    avoid self-induced queueing bias.
    """
    if not cases:
        raise InvalidInputError("empty case set")
    if not baseline:
        raise InvalidInputError("empty baseline trace")
    own_client = client is None
    client = client or httpx.Client(base_url=base_url, timeout=timeout_s)
    try:
        try:
            health = client.get("/healthz")
        except Exception as exc:
            raise ServiceUnreachableError(f"service not reachable at {base_url}: {exc}") from exc
        if health.status_code != 200:
            raise ServiceUnreachableError(
                f"service unhealthy at {base_url}: HTTP {health.status_code}"
            )
        rows = []
        for case_id, image_bytes in cases:
            sid = client.post("/sessions").json()["session_id"]
            upload = client.post(
                f"/sessions/{sid}/image",
                files={"file": (f"{case_id}.png", image_bytes, "image/png")},
            )
            upload.raise_for_status()
            for p_idx, prompt in enumerate(prompts, start=1):
                t0 = time.monotonic()
                reply = client.post(f"/sessions/{sid}/message", json={"text": prompt})
                elapsed = time.monotonic() - t0
                reply.raise_for_status()
                rows.append(
                    {"case_id": case_id, "prompt_index": p_idx, "latency_s": elapsed}
                )
    finally:
        if own_client:
            client.close()
    latencies = [r["latency_s"] for r in rows]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["case_id", "prompt_index", "latency_s"])
    writer.writeheader()
    for row in rows:
        writer.writerow({**row, "latency_s": f"{row['latency_s']:.6f}"})
    service_p = _percentiles(latencies)
    baseline_p = _percentiles(baseline)
    return BenchReport(
        rows=rows,
        service=service_p,
        baseline=baseline_p,
        ratio_p50=baseline_p["p50"] / service_p["p50"] if service_p["p50"] > 0 else float("inf"),
        timeout_s=timeout_s,
        all_within_timeout=all(l <= timeout_s for l in latencies),
        plot_csv=buf.getvalue(),
    )
