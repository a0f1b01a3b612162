import numpy as np
import pytest

from push_sentinel.errors import ModelLoadFailure, SignatureMismatch
from push_sentinel.flow import load_external_model
from push_sentinel.ingest import RoiKeyframe
from push_sentinel.runners import open_runner

from conftest import texture


def roi(pixels, i):
    return RoiKeyframe(i=i, t=float(i * 2), pixels=pixels)


class TestOpenRunner:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ModelLoadFailure, match="not found"):
            open_runner(tmp_path / "nothing.pt", input_names=("a",),
                        output_names=("b",))

    def test_unsupported_suffix(self, tmp_path):
        weird = tmp_path / "model.h5"
        weird.write_bytes(b"\x00")
        with pytest.raises(ModelLoadFailure, match="unsupported"):
            open_runner(weird, input_names=("a",), output_names=("b",))

    def test_corrupt_torchscript(self, tmp_path):
        bad = tmp_path / "model.pt"
        bad.write_bytes(b"not a torchscript archive")
        with pytest.raises(ModelLoadFailure):
            open_runner(bad, input_names=("a",), output_names=("b",))

    def test_onnx_requires_runtime_or_loads(self, tmp_path):
        # onnxruntime absent -> clear load failure; present -> corrupt file fails
        fake = tmp_path / "model.onnx"
        fake.write_bytes(b"\x08\x01")
        with pytest.raises(ModelLoadFailure):
            open_runner(fake, input_names=("frame_prev", "frame_next"),
                        output_names=("flow",))

    def test_torchscript_runner_named_io(self, torch_models):
        runner = open_runner(torch_models["zero_flow"],
                             input_names=("frame_prev", "frame_next"),
                             output_names=("flow",))
        img = np.random.default_rng(0).random((6, 7, 3), dtype=np.float32)
        out = runner.run({"frame_prev": img, "frame_next": img})
        assert set(out) == {"flow"}
        assert out["flow"].shape == (6, 7, 2)


class TestFlowModelHandle:
    def test_load_and_estimate(self, torch_models):
        handle = load_external_model(torch_models["zero_flow"])
        prev, nxt = roi(texture(9, 11, seed=1), 1), roi(texture(9, 11, seed=2), 2)
        field = handle.estimate(prev, nxt)
        assert field.i == 1
        assert field.vectors.shape == (9, 11, 2)
        assert np.all(field.vectors == 0)

    def test_repeated_calls_deterministic(self, torch_models):
        handle = load_external_model(torch_models["zero_flow"])
        prev, nxt = roi(texture(8, 8, seed=1), 1), roi(texture(8, 8, seed=2), 2)
        a = handle.estimate(prev, nxt)
        b = handle.estimate(prev, nxt)
        assert np.array_equal(a.vectors, b.vectors)

    def test_wrong_output_channels(self, torch_models):
        with pytest.raises(SignatureMismatch):
            load_external_model(torch_models["bad_flow"])

    def test_missing_file(self, tmp_path):
        with pytest.raises(ModelLoadFailure):
            load_external_model(tmp_path / "gone.pt")

    def test_estimate_flow_external_dispatch(self, torch_models):
        from push_sentinel.flow import EstimatorKind, FlowEstimatorSpec, estimate_flow

        spec = FlowEstimatorSpec(kind=EstimatorKind.EXTERNAL_MODEL,
                                 model_path=torch_models["zero_flow"])
        prev, nxt = roi(texture(6, 6, seed=1), 1), roi(texture(6, 6, seed=2), 2)
        field = estimate_flow(prev, nxt, spec)
        assert np.all(field.vectors == 0)
