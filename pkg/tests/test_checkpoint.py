import numpy as np
import pytest

from adaact.checkpoint import MAGIC, load_checkpoint, save_checkpoint
from adaact.data import synthetic_blobs
from adaact.errors import DimensionError, FormatError
from adaact.nn import init_network
from adaact.optim import make_optimizer
from adaact.training import TrainingRun

LAYERS = ["conv:2:3:1:1", "relu", "flatten", "dense:5", "relu", "dense:3"]


def _run(kind, init_seed=0):
    ds = synthetic_blobs(3, 20, 16, 0.5, seed=1)
    net = init_network(LAYERS, init_seed, (1, 4, 4))
    opt = make_optimizer(kind, net.thetas)
    opt.hp = type(opt.hp)(**{**opt.hp.__dict__, "total_steps": 40})
    return TrainingRun(net, opt, ds, 16, seed=0)


def test_layout_header(tmp_path):
    run = _run("adaact")
    save_checkpoint(tmp_path / "c", run.net)
    raw = (tmp_path / "c").read_bytes()
    assert raw[:5] == MAGIC
    assert int.from_bytes(raw[5:9], "little") == 6
    assert raw[9] == 2 and raw[10] == 2  # conv tag, rank 2
    assert int.from_bytes(raw[11:15], "little") == 2
    assert int.from_bytes(raw[15:19], "little") == 10
    first = np.frombuffer(raw, "<f8", count=1, offset=19)[0]
    assert first == run.net.params[0].theta[0, 0]


@pytest.mark.parametrize("kind", ["adaact", "sgd", "adam", "adamw"])
def test_round_trip_then_step_is_bit_exact(tmp_path, kind):
    ref = _run(kind)
    for _ in range(5):
        ref.step()
    save_checkpoint(tmp_path / "c", ref.net, ref.optimizer)

    restored = _run(kind, init_seed=99)
    load_checkpoint(tmp_path / "c", restored.net, restored.optimizer)
    assert restored.t == ref.t == 5
    for _ in range(3):
        ref.step()
        restored.step()
    assert ref.net.get_flat().tobytes() == restored.net.get_flat().tobytes()


def test_rejects_corruption(tmp_path):
    run = _run("adaact")
    save_checkpoint(tmp_path / "c", run.net, run.optimizer)
    raw = (tmp_path / "c").read_bytes()
    (tmp_path / "bad").write_bytes(b"XXXXX" + raw[5:])
    with pytest.raises(FormatError):
        load_checkpoint(tmp_path / "bad", run.net)
    (tmp_path / "short").write_bytes(raw[:-4])
    with pytest.raises(FormatError):
        load_checkpoint(tmp_path / "short", run.net)
    other = init_network(["dense:3"], 0, (16,))
    with pytest.raises(DimensionError):
        load_checkpoint(tmp_path / "c", other)


def test_optimizer_kind_mismatch(tmp_path):
    run = _run("adaact")
    run.step()
    save_checkpoint(tmp_path / "c", run.net, run.optimizer)
    sgd = _run("sgd")
    with pytest.raises(FormatError):
        load_checkpoint(tmp_path / "c", sgd.net, sgd.optimizer)
