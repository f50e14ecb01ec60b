"""Deterministic synthetic paired-feature generator.

Draws cluster-structured latent vectors once, then produces one feature set
per requested member. Members of family ``orthogonal_linear`` and
``nonlinear_mlp`` are deterministic maps of the shared latents (and are thus
"homologous" to each other); ``independent`` members draw their own latents
(same cluster assignment, so the ground truth stays shared) and are
"heterogenous" to everything else. Gaussian observation noise is added and
every output is L2-normalized.

All randomness flows from one seed through numpy's PCG64 via SeedSequence
spawning: stream 0 drives the shared latents, stream i+1 drives member i,
so member outputs do not depend on which other members are requested.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .feature_io import FeatureSet, GroundTruth, l2_normalize

FAMILIES = ("orthogonal_linear", "nonlinear_mlp", "independent")

# intra-cluster spread around unit-norm centers; keeps inter/intra distance
# ratio comfortably above 5 for moderate latent dims
_INTRA_SCALE = 0.15


@dataclass(frozen=True)
class SynthSpec:
    n_vectors: int
    latent_dim: int
    output_dim: int
    members: tuple[tuple[str, str], ...]  # (member name, family)
    noise_sigma: float = 0.0
    n_clusters: int = 1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "members", tuple((n, f) for n, f in self.members))
        if self.n_vectors < 1 or self.latent_dim < 1 or self.output_dim < 1:
            raise ValueError("n_vectors, latent_dim, output_dim must be >= 1")
        if self.output_dim < self.latent_dim:
            raise ValueError("output_dim must be >= latent_dim for orthogonal maps")
        if self.n_clusters < 1 or self.n_vectors % self.n_clusters != 0:
            raise ValueError("n_clusters must divide n_vectors")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        names = [n for n, _ in self.members]
        if len(set(names)) != len(names):
            raise ValueError("member names must be unique")
        for _, fam in self.members:
            if fam not in FAMILIES:
                raise ValueError(f"unknown family {fam!r}")


@dataclass(frozen=True)
class SynthResult:
    feature_sets: dict[str, FeatureSet]
    ground_truth: GroundTruth
    latents: np.ndarray  # (n_vectors, latent_dim) shared latent draws
    cluster_of: dict[str, int]


def _cluster_latents(rng: np.random.Generator, n: int, dim: int, k: int) -> np.ndarray:
    centers = rng.normal(size=(k, dim))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    assign = np.arange(n) % k
    spread = _INTRA_SCALE / np.sqrt(dim)
    return centers[assign] + spread * rng.normal(size=(n, dim))


def _orthogonal_map(rng: np.random.Generator, out_dim: int, in_dim: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(out_dim, in_dim)))
    # fix signs so the map is a deterministic function of the stream
    return q * np.sign(np.diag(r))


def generate(spec: SynthSpec) -> SynthResult:
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(spec.seed).spawn(
        1 + len(spec.members)
    )]
    latents = _cluster_latents(streams[0], spec.n_vectors, spec.latent_dim, spec.n_clusters)
    ids = tuple(f"img{i:05d}" for i in range(spec.n_vectors))
    assign = np.arange(spec.n_vectors) % spec.n_clusters

    feature_sets: dict[str, FeatureSet] = {}
    for k, (name, family) in enumerate(spec.members):
        rng = streams[k + 1]
        if family == "orthogonal_linear":
            raw = latents @ _orthogonal_map(rng, spec.output_dim, spec.latent_dim).T
        elif family == "nonlinear_mlp":
            h = 2 * spec.latent_dim
            w1 = rng.normal(size=(h, spec.latent_dim)) / np.sqrt(spec.latent_dim)
            w2 = rng.normal(size=(spec.output_dim, h)) / np.sqrt(h)
            raw = np.tanh(latents @ w1.T) @ w2.T
        else:  # independent: own latents, same cluster assignment
            own = _cluster_latents(rng, spec.n_vectors, spec.latent_dim, spec.n_clusters)
            raw = own @ _orthogonal_map(rng, spec.output_dim, spec.latent_dim).T
        if spec.noise_sigma > 0:
            raw = raw + spec.noise_sigma * rng.normal(size=raw.shape)
        feature_sets[name] = l2_normalize(FeatureSet(name=name, ids=ids, vectors=raw))

    relevant = {}
    for i, qid in enumerate(ids):
        same = frozenset(ids[j] for j in np.nonzero(assign == assign[i])[0] if j != i)
        if same:
            relevant[qid] = same
    return SynthResult(
        feature_sets=feature_sets,
        ground_truth=GroundTruth(relevant=relevant),
        latents=latents,
        cluster_of={ids[i]: int(assign[i]) for i in range(spec.n_vectors)},
    )
