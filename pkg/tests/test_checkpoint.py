"""NTAR archives and weight import."""

import struct
from collections import OrderedDict

import numpy as np
import pytest

from autodiff.rng import RngStream
from autodiff.tensor import no_grad
from config.errors import (
    BadMagicError,
    CheckpointBadMagicError,
    CheckpointChecksumError,
    CheckpointError,
    CheckpointTruncatedError,
    TruncatedFileError,
)
from phase2_dataset_store.binary import crc32
from phase3_model.checkpoint import (
    Checkpoint,
    decode_checkpoint,
    encode_checkpoint,
    export_weights,
    import_weights,
    load_checkpoint,
    save_checkpoint,
)
from phase3_model.network import build_model


def _archive():
    return Checkpoint(OrderedDict([
        ("a.weight", np.arange(6, dtype=np.float32).reshape(2, 3)),
        ("a.scalar", np.array(2.5, dtype=np.float64)),
        ("b.bias", np.zeros(4, dtype=np.float32)),
    ]))


def test_archive_keeps_names_order_dtypes_and_values():
    ckpt = _archive()
    back = decode_checkpoint(encode_checkpoint(ckpt))
    assert back.names() == ckpt.names()
    for name in ckpt.names():
        assert back[name].dtype == ckpt[name].dtype
        assert back[name].shape == ckpt[name].shape
        np.testing.assert_array_equal(back[name], ckpt[name])


def test_bad_magic():
    buf = encode_checkpoint(_archive())
    with pytest.raises(CheckpointBadMagicError) as info:
        decode_checkpoint(b"EEGD" + buf[4:])
    assert isinstance(info.value, BadMagicError)


def test_truncation_is_reported_at_any_cut():
    buf = encode_checkpoint(_archive())
    for cut in (6, 20, len(buf) // 2, len(buf) - 1):
        with pytest.raises(CheckpointTruncatedError) as info:
            decode_checkpoint(buf[:cut])
        assert isinstance(info.value, TruncatedFileError)


def test_flipped_byte_fails_checksum():
    buf = bytearray(encode_checkpoint(_archive()))
    buf[-8] ^= 0xFF
    with pytest.raises(CheckpointChecksumError):
        decode_checkpoint(bytes(buf))


def test_unsupported_dtype_is_rejected():
    with pytest.raises(CheckpointError):
        encode_checkpoint(Checkpoint(OrderedDict([("x", np.arange(3))])))


def test_missing_file(tmp_path):
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "absent.ntar")


def test_export_import_reproduces_predictions(desk_config, tmp_path):
    source = build_model(desk_config, RngStream(1))
    path = tmp_path / "model.ntar"
    save_checkpoint(export_weights(source), path)

    target = build_model(desk_config, RngStream(2))
    import_weights(target, load_checkpoint(path), strict=True)
    x = RngStream(9).normal(1.0, (2, desk_config.in_channels, desk_config.timepoints), np.float32)
    with no_grad():
        np.testing.assert_array_equal(source.eval()(x).data, target.eval()(x).data)


def test_strict_import_rejects_missing_and_unknown_names(desk_config):
    model = build_model(desk_config, RngStream(0))
    ckpt = export_weights(model)
    del ckpt.tensors["head.fc2.bias"]
    with pytest.raises(CheckpointError):
        import_weights(model, ckpt, strict=True)

    extra = export_weights(model)
    extra.tensors["head.fc3.weight"] = np.zeros(2, dtype=np.float32)
    with pytest.raises(CheckpointError):
        import_weights(model, extra, strict=True)


def test_failed_import_leaves_model_untouched(desk_config):
    model = build_model(desk_config, RngStream(0))
    before = model.state_dict()
    ckpt = export_weights(build_model(desk_config, RngStream(1)))
    ckpt.tensors["vit.norm.gamma"] = np.ones(3, dtype=np.float32)
    with pytest.raises(CheckpointError):
        import_weights(model, ckpt, strict=True)
    after = model.state_dict()
    assert all(np.array_equal(before[k], after[k]) for k in before)


def test_non_strict_import_touches_only_the_encoder(desk_config):
    model = build_model(desk_config, RngStream(0))
    before = model.state_dict()
    donor = export_weights(build_model(desk_config, RngStream(1)))
    import_weights(model, donor, strict=False)
    after = model.state_dict()
    for name in after:
        expected = donor[name] if name.startswith("vit.") else before[name]
        np.testing.assert_array_equal(after[name], expected)


def test_overflowing_dims_are_truncation_not_a_crash():
    body = struct.pack("<II", 1, 1) + struct.pack("<H", 1) + b"w" + struct.pack("<BB", 0, 2)
    body += struct.pack("<2Q", 2 ** 32, 2 ** 32)
    buf = b"NTAR" + body + struct.pack("<I", crc32(body))
    with pytest.raises(CheckpointTruncatedError):
        decode_checkpoint(buf)
