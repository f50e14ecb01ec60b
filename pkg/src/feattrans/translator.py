"""Hybrid auto-encoder translators between feature spaces.

A translator holds two encoders (source, target) into a shared latent space
and one shared decoder back to the target space. Training minimizes the sum
of the translation error (decode source latents, compare to targets) and the
reconstruction error (decode target latents, compare to targets), each the
mean Euclidean distance over the batch. At inference only the source encoder
and the decoder run. An MLP baseline (single direct regression stack, no
second encoder, translation error only) is also provided.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import BadMagic, BadModelFile, DataError, NumericError, UnsupportedForBaseline
from .feature_io import FeatureSet, PairedSet
from .nn_core import (
    AdamState,
    DenseLayer,
    LayerStack,
    adam_step,
    backward,
    build_stack,
    euclid_loss,
    forward,
)

KIND_HAE = "hae"
KIND_MLP = "mlp_baseline"

DEFAULT_LATENT_DIM = 510


@dataclass
class TranslatorModel:
    kind: str  # hae | mlp_baseline
    source_name: str
    target_name: str
    latent_dim: int
    encoder_s: LayerStack
    encoder_t: LayerStack | None  # None for mlp_baseline
    decoder: LayerStack | None  # None for mlp_baseline

    @property
    def source_dim(self) -> int:
        return self.encoder_s.in_dim

    @property
    def target_dim(self) -> int:
        if self.kind == KIND_MLP:
            return self.encoder_s.out_dim
        return self.decoder.out_dim

    def copy(self) -> "TranslatorModel":
        return TranslatorModel(
            kind=self.kind,
            source_name=self.source_name,
            target_name=self.target_name,
            latent_dim=self.latent_dim,
            encoder_s=self.encoder_s.copy(),
            encoder_t=self.encoder_t.copy() if self.encoder_t else None,
            decoder=self.decoder.copy() if self.decoder else None,
        )

    def stacks(self) -> list[LayerStack]:
        if self.kind == KIND_MLP:
            return [self.encoder_s]
        return [self.encoder_s, self.encoder_t, self.decoder]

    def parameters(self) -> list[np.ndarray]:
        out = []
        for s in self.stacks():
            out.extend(s.parameters())
        return out


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-5
    batch_size: int = 64
    max_epochs: int = 200
    patience: int = 20
    val_fraction: float = 0.1
    seed: int = 0
    latent_activation: str = "linear"  # activation applied at the latent layer

    def __post_init__(self):
        if not (0.0 < self.val_fraction < 1.0):
            raise ValueError("val_fraction must lie in (0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass
class TrainLog:
    train_translation: list[float] = field(default_factory=list)
    train_reconstruction: list[float] = field(default_factory=list)
    train_total: list[float] = field(default_factory=list)
    val_translation: list[float] = field(default_factory=list)
    val_reconstruction: list[float] = field(default_factory=list)
    val_total: list[float] = field(default_factory=list)
    best_epoch: int = -1

    @property
    def epochs_run(self) -> int:
        return len(self.train_total)


def _hidden_count(dim: int) -> int:
    # 3 hidden layers for wide (>=1024) inputs, 2 otherwise
    return 3 if dim >= 1024 else 2


def build(
    source_dim: int,
    target_dim: int,
    latent_dim: int = DEFAULT_LATENT_DIM,
    kind: str = KIND_HAE,
    seed: int = 0,
    source_name: str = "source",
    target_name: str = "target",
    latent_activation: str = "linear",
) -> TranslatorModel:
    """Construct an untrained translator.

    Encoder widths repeat the input dim for the hidden layers then project to
    the latent dim; the decoder mirrors the target-side encoder reversed and
    ends linear + L2 normalization. The MLP baseline is a single stack of the
    same hidden widths mapping straight to the target dim.
    """
    if source_dim < 1 or target_dim < 1 or (kind == KIND_HAE and latent_dim < 1):
        raise DataError("dims must be >= 1")
    rng = np.random.default_rng(seed)
    if kind == KIND_MLP:
        dims = (source_dim,) + (source_dim,) * (_hidden_count(source_dim) - 1) + (target_dim,)
        stack = build_stack(dims, final_l2_normalize=True, rng=rng)
        return TranslatorModel(
            kind=kind,
            source_name=source_name,
            target_name=target_name,
            latent_dim=0,
            encoder_s=stack,
            encoder_t=None,
            decoder=None,
        )
    if kind != KIND_HAE:
        raise DataError(f"unknown model kind {kind!r}")
    enc_s_dims = (source_dim,) * (1 + _hidden_count(source_dim)) + (latent_dim,)
    enc_t_dims = (target_dim,) * (1 + _hidden_count(target_dim)) + (latent_dim,)
    dec_dims = tuple(reversed(enc_t_dims))
    return TranslatorModel(
        kind=kind,
        source_name=source_name,
        target_name=target_name,
        latent_dim=latent_dim,
        encoder_s=build_stack(enc_s_dims, False, rng, last_activation=latent_activation),
        encoder_t=build_stack(enc_t_dims, False, rng, last_activation=latent_activation),
        decoder=build_stack(dec_dims, True, rng),
    )


def _batch_losses(model: TranslatorModel, vs: np.ndarray, vt: np.ndarray) -> tuple[float, float]:
    """(translation error, reconstruction error) on one batch, no gradients."""
    if model.kind == KIND_MLP:
        v_st, _ = forward(model.encoder_s, vs)
        trans, _ = euclid_loss(v_st, vt)
        return trans, 0.0
    z_s, _ = forward(model.encoder_s, vs)
    v_st, _ = forward(model.decoder, z_s)
    z_t, _ = forward(model.encoder_t, vt)
    v_tt, _ = forward(model.decoder, z_t)
    trans, _ = euclid_loss(v_st, vt)
    recon, _ = euclid_loss(v_tt, vt)
    return trans, recon


def _train_step(
    model: TranslatorModel, vs: np.ndarray, vt: np.ndarray, state: AdamState
) -> float:
    """One gradient step on a batch; returns the total batch loss."""
    if model.kind == KIND_MLP:
        v_st, tape = forward(model.encoder_s, vs)
        loss, g = euclid_loss(v_st, vt)
        grads, _ = backward(model.encoder_s, tape, g)
        adam_step(model.encoder_s.parameters(), grads, state)
        return loss

    z_s, tape_es = forward(model.encoder_s, vs)
    v_st, tape_ds = forward(model.decoder, z_s)
    z_t, tape_et = forward(model.encoder_t, vt)
    v_tt, tape_dt = forward(model.decoder, z_t)
    trans, g_st = euclid_loss(v_st, vt)
    recon, g_tt = euclid_loss(v_tt, vt)

    g_dec_s, g_zs = backward(model.decoder, tape_ds, g_st)
    g_dec_t, g_zt = backward(model.decoder, tape_dt, g_tt)
    g_enc_s, _ = backward(model.encoder_s, tape_es, g_zs)
    g_enc_t, _ = backward(model.encoder_t, tape_et, g_zt)
    g_dec = [a + b for a, b in zip(g_dec_s, g_dec_t)]

    # parameters() returns live references; adam_step updates them in place
    adam_step(model.parameters(), g_enc_s + g_enc_t + g_dec, state)
    return trans + recon


def _check_unit_norm(fs: FeatureSet) -> None:
    norms = np.linalg.norm(fs.vectors, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-6):
        raise DataError(
            f"target feature set {fs.name!r} must be L2-normalized before training"
        )


def train(
    model: TranslatorModel, paired: PairedSet, cfg: TrainConfig
) -> tuple[TranslatorModel, TrainLog]:
    """Mini-batch training with early stopping on validation total loss.

    Returns the best-validation parameters, not the last epoch's.
    """
    if len(paired) == 0:
        raise DataError("empty paired set")
    if paired.source.dim != model.source_dim or paired.target.dim != model.target_dim:
        raise DataError(
            f"paired dims ({paired.source.dim}, {paired.target.dim}) do not match model "
            f"({model.source_dim}, {model.target_dim})"
        )
    _check_unit_norm(paired.target)

    rng = np.random.default_rng(cfg.seed)
    n = len(paired)
    perm = rng.permutation(n)
    n_val = max(1, int(round(cfg.val_fraction * n))) if n > 1 else 0
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    if train_idx.size == 0:
        train_idx, val_idx = perm, perm
    vs_all, vt_all = paired.source.vectors, paired.target.vectors

    state = AdamState.init(model.parameters(), lr=cfg.lr)
    log = TrainLog()
    best = model.copy()
    best_val = np.inf
    since_best = 0

    for epoch in range(cfg.max_epochs):
        order = rng.permutation(train_idx)
        for start in range(0, order.size, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            total = _train_step(model, vs_all[idx], vt_all[idx], state)
            if not np.isfinite(total):
                raise NumericError(f"non-finite loss at epoch {epoch}")

        tr_t, tr_r = _batch_losses(model, vs_all[train_idx], vt_all[train_idx])
        if val_idx.size:
            va_t, va_r = _batch_losses(model, vs_all[val_idx], vt_all[val_idx])
        else:
            va_t, va_r = tr_t, tr_r
        log.train_translation.append(tr_t)
        log.train_reconstruction.append(tr_r)
        log.train_total.append(tr_t + tr_r)
        log.val_translation.append(va_t)
        log.val_reconstruction.append(va_r)
        log.val_total.append(va_t + va_r)

        if va_t + va_r < best_val:
            best_val = va_t + va_r
            best = model.copy()
            log.best_epoch = epoch
            since_best = 0
        else:
            since_best += 1
            if since_best >= cfg.patience:
                break

    return best, log


def _check_nonzero_rows(out: np.ndarray, inputs: FeatureSet) -> None:
    # an all-dead ReLU path leaves the L2-normalized output at exactly zero
    norms = np.linalg.norm(out, axis=1)
    if np.any(norms == 0.0):
        bad = inputs.ids[int(np.argmin(norms))]
        raise NumericError(f"model produced an all-zero output row for id {bad!r}")


def translate(model: TranslatorModel, src: FeatureSet) -> FeatureSet:
    """Map source features into the target space; output rows are unit-norm."""
    if src.dim != model.source_dim:
        raise DataError(f"input dim {src.dim} does not match model source dim {model.source_dim}")
    if model.kind == KIND_MLP:
        out, _ = forward(model.encoder_s, src.vectors)
    else:
        z, _ = forward(model.encoder_s, src.vectors)
        out, _ = forward(model.decoder, z)
    _check_nonzero_rows(out, src)
    return FeatureSet(
        name=f"{model.source_name}2{model.target_name}",
        ids=src.ids,
        vectors=out,
        normalized=True,
    )


def reconstruct(model: TranslatorModel, tgt: FeatureSet) -> FeatureSet:
    """Auto-encode target features through the target encoder and decoder."""
    if model.kind == KIND_MLP:
        raise UnsupportedForBaseline()
    if tgt.dim != model.target_dim:
        raise DataError(f"input dim {tgt.dim} does not match model target dim {model.target_dim}")
    z, _ = forward(model.encoder_t, tgt.vectors)
    out, _ = forward(model.decoder, z)
    _check_nonzero_rows(out, tgt)
    return FeatureSet(
        name=f"{model.target_name}_reconstructed",
        ids=tgt.ids,
        vectors=out,
        normalized=True,
    )


_MAGIC = b"HAET"
_VERSION = 1
_KIND_BYTES = {KIND_HAE: 0, KIND_MLP: 1}
_KIND_NAMES = {v: k for k, v in _KIND_BYTES.items()}


def _write_str(f, s: str) -> None:
    raw = s.encode("utf-8")
    f.write(struct.pack("<I", len(raw)))
    f.write(raw)


def _read_exact(f, n: int) -> bytes:
    raw = f.read(n)
    if len(raw) != n:
        raise BadModelFile("truncated model file")
    return raw


def _read_str(f) -> str:
    (n,) = struct.unpack("<I", _read_exact(f, 4))
    return _read_exact(f, n).decode("utf-8")


def _write_stack(f, stack: LayerStack) -> None:
    f.write(struct.pack("<I", len(stack.layers)))
    for d in stack.dims:
        f.write(struct.pack("<I", d))
    f.write(struct.pack("<B", 1 if stack.final_l2_normalize else 0))
    for layer in stack.layers:
        f.write(struct.pack("<B", 1 if layer.activation == "relu" else 0))
    for layer in stack.layers:
        f.write(layer.weights.astype("<f8").tobytes())
        f.write(layer.bias.astype("<f8").tobytes())


def _read_stack(f) -> LayerStack:
    (n_layers,) = struct.unpack("<I", _read_exact(f, 4))
    dims = struct.unpack(f"<{n_layers + 1}I", _read_exact(f, 4 * (n_layers + 1)))
    (final_norm,) = struct.unpack("<B", _read_exact(f, 1))
    acts = struct.unpack(f"<{n_layers}B", _read_exact(f, n_layers))
    layers = []
    for k in range(n_layers):
        d_in, d_out = dims[k], dims[k + 1]
        w = np.frombuffer(_read_exact(f, 8 * d_out * d_in), dtype="<f8").reshape(d_out, d_in)
        b = np.frombuffer(_read_exact(f, 8 * d_out), dtype="<f8")
        layers.append(DenseLayer(w.copy(), b.copy(), "relu" if acts[k] else "linear"))
    return LayerStack(layers=layers, final_l2_normalize=bool(final_norm))


def save_model(model: TranslatorModel, path) -> None:
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<H", _VERSION))
        f.write(struct.pack("<B", _KIND_BYTES[model.kind]))
        _write_str(f, model.source_name)
        _write_str(f, model.target_name)
        f.write(struct.pack("<I", model.latent_dim))
        for stack in model.stacks():
            _write_stack(f, stack)


def load_model(path) -> TranslatorModel:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != _MAGIC:
            raise BadMagic(magic)
        (version,) = struct.unpack("<H", _read_exact(f, 2))
        if version != _VERSION:
            raise BadModelFile(f"unsupported model format version {version}")
        (kind_byte,) = struct.unpack("<B", _read_exact(f, 1))
        if kind_byte not in _KIND_NAMES:
            raise BadModelFile(f"unknown model kind byte {kind_byte}")
        kind = _KIND_NAMES[kind_byte]
        source_name = _read_str(f)
        target_name = _read_str(f)
        (latent_dim,) = struct.unpack("<I", _read_exact(f, 4))
        enc_s = _read_stack(f)
        if kind == KIND_MLP:
            enc_t = dec = None
        else:
            enc_t = _read_stack(f)
            dec = _read_stack(f)
        if f.read(1):
            raise BadModelFile("trailing bytes after model payload")
    return TranslatorModel(
        kind=kind,
        source_name=source_name,
        target_name=target_name,
        latent_dim=latent_dim,
        encoder_s=enc_s,
        encoder_t=enc_t,
        decoder=dec,
    )
