"""Blackbox generation backends.

Two calls are required of any backend: drawing fresh samples, and producing
variations of given samples at a controllable degree. The built-in simulated
backend works in a bounded ball and perturbs samples with isotropic Gaussian
noise on a dyadic ladder of scales; the HTTP adapter forwards the same two
calls to an external service over a small JSON protocol.

Degree convention for the simulated backend: a degree ``i > 0`` selects the
noise scale ``sigma_i = D * sqrt(ln L) / (2**i * d)`` (evaluated continuously
in ``i``), where ``D`` is the ball diameter, ``d`` the dimension and ``L``
the per-scale variation count. Degree 0 is the identity (no noise).
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional

import numpy as np
import requests

from .core import BallWorld, Population, Sample
from .rng import RngStream

__all__ = [
    "BackendError",
    "IDENTITY_DEGREE",
    "VariationDegree",
    "SimulatedBackendConfig",
    "SimulatedBackend",
    "HttpBackend",
    "BackendServer",
    "serve_backend",
]

IDENTITY_DEGREE = 0.0


class BackendError(RuntimeError):
    """A generation backend failed or returned an unusable response."""


@dataclass(frozen=True)
class VariationDegree:
    """Per-iteration schedule of variation degrees.

    ``schedule[t-1]`` is the degree used for iteration ``t`` (1-based).
    Degrees must be strictly positive; the identity degree 0 is reserved
    for direct calls outside a schedule.
    """

    schedule: tuple

    def __post_init__(self):
        sched = tuple(float(v) for v in self.schedule)
        if not sched:
            raise ValueError("schedule must be nonempty")
        if any(v <= 0 for v in sched):
            raise ValueError("schedule degrees must be strictly positive")
        object.__setattr__(self, "schedule", sched)

    def __len__(self) -> int:
        return len(self.schedule)

    def at(self, t: int) -> float:
        """Degree for iteration ``t`` (1-based)."""
        if not 1 <= t <= len(self.schedule):
            raise IndexError(f"iteration {t} outside schedule of length {len(self.schedule)}")
        return self.schedule[t - 1]

    @staticmethod
    def constant(degree: float, iterations: int) -> "VariationDegree":
        return VariationDegree((degree,) * iterations)

    @staticmethod
    def ramp(start: float, stop: float, iterations: int) -> "VariationDegree":
        """Linearly spaced degrees from coarse to fine."""
        return VariationDegree(tuple(np.linspace(start, stop, iterations)))


@dataclass(frozen=True)
class SimulatedBackendConfig:
    """Simulated backend parameters.

    ``variations_per_scale`` (L) and ``eta`` (target resolution) fix the
    scale ladder: ``num_scales = ceil(log2(D / eta))`` scales, halving from
    the coarsest. ``clip`` projects variations back into the ball.
    """

    world: BallWorld
    variations_per_scale: int
    eta: float
    clip: bool = True

    def __post_init__(self):
        if self.variations_per_scale < 1:
            raise ValueError("variations_per_scale must be >= 1")
        if not 0 < self.eta < self.world.diameter:
            raise ValueError("eta must satisfy 0 < eta < diameter")
        if self.num_scales < 1:
            raise ValueError("configuration yields no scales")

    @property
    def num_scales(self) -> int:
        return math.ceil(math.log2(self.world.diameter / self.eta))

    def scale_sigma(self, degree: float) -> float:
        """Noise std for a degree; 0 is the identity, i>0 the dyadic ladder."""
        if degree < 0:
            raise ValueError(f"unknown degree {degree}")
        if degree == 0:
            return 0.0
        world = self.world
        return (
            world.diameter
            * math.sqrt(math.log(self.variations_per_scale))
            / (2.0**degree * world.dimension)
        )


class SimulatedBackend:
    """Gaussian-perturbation backend on a bounded ball.

    Deterministic: identical (stream, inputs, config) produce bit-identical
    outputs, independent of batching, because every source sample draws from
    its own derived substream.
    """

    def __init__(self, config: SimulatedBackendConfig):
        self.config = config

    @property
    def dimension(self) -> int:
        return self.config.world.dimension

    def random_api(
        self, n: int, condition: Optional[str] = None, rng: RngStream = None
    ) -> Population:
        """Draw ``n`` samples uniformly from the ball."""
        if n < 1:
            raise ValueError("n must be >= 1")
        if rng is None:
            raise ValueError("random_api requires a seeded stream")
        world = self.config.world
        gen = rng.generator()
        direction = gen.standard_normal((n, world.dimension))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        radius = world.radius * gen.random(n) ** (1.0 / world.dimension)
        coords = world.center + direction * radius[:, None]
        conditions = None if condition is None else (condition,) * n
        return Population(coords, generation=0, conditions=conditions)

    def variation_api(
        self,
        samples: Population,
        degree: float,
        rng: RngStream,
        count_per_sample: int = 1,
    ) -> Population:
        """Perturb each input sample ``count_per_sample`` times.

        Output ordering groups all variations of input i before those of
        input i+1; condition tags are inherited from the source sample.
        """
        if len(samples) == 0:
            raise ValueError("variation_api requires a nonempty input")
        if count_per_sample < 1:
            raise ValueError("count_per_sample must be >= 1")
        sigma = self.config.scale_sigma(float(degree))
        n, dim = len(samples), samples.dimension
        coords = np.empty((n * count_per_sample, dim), dtype=np.float64)
        for i in range(n):
            gen = rng.child(i).generator()
            block = samples.coords[i] + sigma * gen.standard_normal((count_per_sample, dim))
            coords[i * count_per_sample : (i + 1) * count_per_sample] = block
        if self.config.clip:
            coords = self.config.world.project(coords)
        conditions = None
        if samples.conditions is not None:
            conditions = tuple(
                samples.conditions[i] for i in range(n) for _ in range(count_per_sample)
            )
        return Population(coords, generation=samples.generation + 1, conditions=conditions)

    def multi_scale_variation(self, sample: Sample, rng: RngStream) -> Population:
        """All-scales offspring of one sample: L draws at each scale, scale-major."""
        cfg = self.config
        L, r, dim = cfg.variations_per_scale, cfg.num_scales, sample.dimension
        coords = np.empty((L * r, dim), dtype=np.float64)
        for idx, scale in enumerate(range(1, r + 1)):
            gen = rng.child(scale).generator()
            sigma = cfg.scale_sigma(scale)
            coords[idx * L : (idx + 1) * L] = sample.coords + sigma * gen.standard_normal((L, dim))
        if cfg.clip:
            coords = cfg.world.project(coords)
        conditions = None if sample.condition is None else (sample.condition,) * (L * r)
        return Population(coords, conditions=conditions)


# ---------------------------------------------------------------------------
# HTTP adapter
#
# Wire protocol (JSON over HTTP/1.1):
#   POST /random    {"n": int, "dim": int, "condition": str|null, "seed": uint64}
#                   -> {"samples": [[f64, ...], ...]}
#   POST /variation {"samples": [[f64, ...], ...], "degree": number,
#                    "count_per_sample": int, "seed": uint64}
#                   -> {"samples": ...} grouped by source sample, source order.
#
# No retries: a failed call aborts the run rather than silently duplicating
# randomness on the server side.
# ---------------------------------------------------------------------------


class HttpBackend:
    """Client adapter speaking the generation wire protocol."""

    def __init__(self, endpoint: str, dimension: int, timeout: float = 30.0):
        self.endpoint = endpoint.rstrip("/")
        self.dimension = dimension
        self.timeout = timeout

    def _post(self, route: str, body: dict) -> dict:
        try:
            resp = requests.post(
                f"{self.endpoint}{route}", json=body, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise BackendError(f"backend unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise BackendError(f"backend returned HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()
        except ValueError as exc:
            raise BackendError(f"backend returned invalid JSON: {exc}") from exc

    def _parse_samples(self, payload: dict, expected: int) -> np.ndarray:
        samples = payload.get("samples")
        if samples is None:
            raise BackendError("backend response missing 'samples'")
        coords = np.asarray(samples, dtype=np.float64)
        if coords.ndim != 2 or coords.shape != (expected, self.dimension):
            raise BackendError(
                f"backend returned shape {coords.shape}, expected ({expected}, {self.dimension})"
            )
        return coords

    def random_api(
        self, n: int, condition: Optional[str] = None, rng: RngStream = None
    ) -> Population:
        if n < 1:
            raise ValueError("n must be >= 1")
        if rng is None:
            raise ValueError("random_api requires a seeded stream")
        body = {"n": n, "dim": self.dimension, "condition": condition, "seed": rng.wire_seed()}
        coords = self._parse_samples(self._post("/random", body), n)
        conditions = None if condition is None else (condition,) * n
        return Population(coords, generation=0, conditions=conditions)

    def variation_api(
        self,
        samples: Population,
        degree: float,
        rng: RngStream,
        count_per_sample: int = 1,
    ) -> Population:
        if len(samples) == 0:
            raise ValueError("variation_api requires a nonempty input")
        if count_per_sample < 1:
            raise ValueError("count_per_sample must be >= 1")
        body = {
            "samples": samples.coords.tolist(),
            "degree": float(degree),
            "count_per_sample": count_per_sample,
            "seed": rng.wire_seed(),
        }
        coords = self._parse_samples(
            self._post("/variation", body), len(samples) * count_per_sample
        )
        conditions = None
        if samples.conditions is not None:
            conditions = tuple(
                samples.conditions[i]
                for i in range(len(samples))
                for _ in range(count_per_sample)
            )
        return Population(coords, generation=samples.generation + 1, conditions=conditions)


class _BackendRequestHandler(BaseHTTPRequestHandler):
    backend: SimulatedBackend = None

    def log_message(self, *args):  # quiet by default
        pass

    def _reply(self, status: int, payload: dict) -> None:
        blob = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(blob)))
        self.end_headers()
        self.wfile.write(blob)

    def do_POST(self):
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = json.loads(self.rfile.read(length).decode("utf-8"))
            rng = RngStream(int(body["seed"]))
            if self.path == "/random":
                pop = self.backend.random_api(int(body["n"]), body.get("condition"), rng)
            elif self.path == "/variation":
                source = Population(np.asarray(body["samples"], dtype=np.float64))
                pop = self.backend.variation_api(
                    source,
                    float(body["degree"]),
                    rng,
                    int(body.get("count_per_sample", 1)),
                )
            else:
                self._reply(404, {"error": f"unknown route {self.path}"})
                return
            self._reply(200, {"samples": pop.coords.tolist()})
        except Exception as exc:  # surface the failure to the client
            self._reply(400, {"error": str(exc)})


class BackendServer:
    """Reference HTTP server exposing a simulated backend on the wire protocol."""

    def __init__(self, backend: SimulatedBackend, host: str = "127.0.0.1", port: int = 0):
        handler = type("Handler", (_BackendRequestHandler,), {"backend": backend})
        self._httpd = ThreadingHTTPServer((host, port), handler)
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)

    @property
    def endpoint(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "BackendServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()

    def __enter__(self) -> "BackendServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


def serve_backend(backend: SimulatedBackend, host: str = "127.0.0.1", port: int = 0) -> BackendServer:
    """Start a background server for ``backend``; caller stops it."""
    return BackendServer(backend, host, port).start()
