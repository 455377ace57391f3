import numpy as np
import pytest

from tactileflow import io
from tactileflow.config import PipelineConfig
from tactileflow.errors import DataValidationError
from tactileflow.flow import FlowField
from tactileflow.frames import TactileFrame
from tactileflow.geometry import reference_layout
from tactileflow.segmentation import make_segments
from tactileflow.smoothing import TaxelRecording
from tactileflow.synth import Scenario, generate


@pytest.fixture
def rec(rng):
    n = 12
    return TaxelRecording(np.arange(n) / 50.0, rng.normal(100, 3, (n, 24)), rng.normal(2000, 3, n))


def test_recording_roundtrip_exact(tmp_path, rec):
    p = tmp_path / "r.csv"
    io.write_recording(p, rec)
    back = io.read_recording(p)
    assert np.array_equal(back.impedances, rec.impedances)
    assert np.array_equal(back.pressure, rec.pressure)
    assert np.array_equal(back.timestamps, rec.timestamps)
    assert p.read_text().splitlines()[0] == "t,pdc," + ",".join(f"e{i}" for i in range(1, 25))


def _corrupt(tmp_path, rec, fn):
    p = tmp_path / "r.csv"
    io.write_recording(p, rec)
    lines = p.read_text().splitlines()
    fn(lines)
    p.write_text("\n".join(lines) + "\n")
    return p


def test_wrong_column_count_names_row(tmp_path, rec):
    def drop(lines):
        lines[4] = ",".join(lines[4].split(",")[:-1])

    with pytest.raises(DataValidationError, match="row 5"):
        io.read_recording(_corrupt(tmp_path, rec, drop))


def test_non_monotone_time_names_row(tmp_path, rec):
    def swap(lines):
        lines[6], lines[7] = lines[7], lines[6]

    with pytest.raises(DataValidationError, match="row 8"):
        io.read_recording(_corrupt(tmp_path, rec, swap))


def test_bad_header_and_values(tmp_path, rec):
    def header(lines):
        lines[0] = lines[0].replace("pdc", "p")

    with pytest.raises(DataValidationError, match="row 1"):
        io.read_recording(_corrupt(tmp_path, rec, header))

    def text(lines):
        lines[2] = "x" + lines[2][1:]

    with pytest.raises(DataValidationError, match="row 3"):
        io.read_recording(_corrupt(tmp_path, rec, text))


def test_layout_roundtrip_and_errors(tmp_path):
    lay = reference_layout()
    p = tmp_path / "layout.txt"
    io.write_layout(p, lay, comment="reference")
    assert np.array_equal(io.read_layout(p).positions, lay.positions)
    lines = p.read_text().splitlines()
    lines[3] = "7 0 0 0"
    p.write_text("\n".join(lines))
    with pytest.raises(DataValidationError, match="line 4"):
        io.read_layout(p)


def test_kv_parsing(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("# comment\na = 1\n\n b.c=  x y  # trailing\n")
    assert io.read_kv(p) == {"a": "1", "b.c": "x y"}
    p.write_text("a = 1\nnonsense\n")
    with pytest.raises(DataValidationError, match="line 2"):
        io.read_kv(p)


def test_pipeline_config_from_kv():
    cfg = PipelineConfig.from_kv(
        {
            "smoother.r_scale": "0.01",
            "kernel.squared": "true",
            "grid.n_theta": "32",
            "frames.projections": "top,left",
            "frames.shape": "64x96",
            "surface.scale": "auto",
            "peaks.prominence": "none",
            "peaks.half_width": "12",
            "segmentation.labels": "during",
            "flow.levels": "2",
            "flow.residual_guard": "true",
        }
    )
    assert cfg.smoother.r_scale == 0.01 and cfg.smoother.s0_scale == 0.01
    assert cfg.kernel.squared is True and cfg.grid.n_theta == 32
    assert cfg.frames.projections == ("top-xy", "left-yz") and cfg.frames.shape == (64, 96)
    assert cfg.surface.scale is None and cfg.peaks.half_width == 12
    assert cfg.segmentation.labels == ("during",) and cfg.flow.levels == 2
    assert cfg.flow.residual_guard is True


def test_config_roundtrip(tmp_path):
    cfg = PipelineConfig.from_kv({"kernel.sigma": "2.5", "frames.projections": "right"})
    p = tmp_path / "cfg.txt"
    io.write_kv(p, cfg.to_kv())
    assert PipelineConfig.load(p) == cfg


@pytest.mark.parametrize(
    "key,value",
    [
        ("smoother.r_scale", "-1"),
        ("kernel.sigma", "abc"),
        ("flow.pyr_scale", "1.5"),
        ("frames.projections", "front"),
        ("surface.tare", "sometimes"),
        ("peaks.min_separation", "0"),
        ("kernel.bogus", "1"),
        ("nosection", "1"),
    ],
)
def test_invalid_config_names_field(key, value):
    with pytest.raises(DataValidationError) as exc:
        PipelineConfig.from_kv({key: value})
    field = key.split(".")[-1] if key != "frames.projections" else "front"
    assert field in str(exc.value)


def test_scenario_file_coercion():
    sc = io.dataclass_from_kv(Scenario, {"kind": "ridge-crossing", "heading": "1.5", "sample_rate": "25"})
    assert sc == Scenario(kind="ridge-crossing", heading=1.5, sample_rate=25.0)


def test_netpbm_roundtrip(tmp_path, rng):
    g = rng.integers(0, 256, (7, 5), dtype=np.uint8)
    io.write_pgm(tmp_path / "a.pgm", g)
    assert np.array_equal(io.read_pgm(tmp_path / "a.pgm"), g)
    c = rng.integers(0, 256, (4, 6, 3), dtype=np.uint8)
    io.write_ppm(tmp_path / "a.ppm", c)
    assert np.array_equal(io.read_ppm(tmp_path / "a.ppm"), c)
    with pytest.raises(DataValidationError):
        io.read_ppm(tmp_path / "a.pgm")


def test_frame_roundtrip(tmp_path, rng):
    img = rng.uniform(size=(16, 20))
    mask = img > 0.3
    fr = TactileFrame(np.where(mask, img, 0), mask, "left-yz", (-1.5, 2.25), 0.42)
    io.write_frame(tmp_path, 3, fr)
    back = io.read_frame(tmp_path / "frame_000003.pgm")
    assert np.max(np.abs(back.intensity - fr.intensity)) <= 0.5 / 255 + 1e-12
    assert np.array_equal(back.mask, mask)
    assert (back.projection, back.norm_bounds, back.timestamp) == ("left-yz", (-1.5, 2.25), 0.42)
    assert io.list_frames(tmp_path) == [tmp_path / "frame_000003.pgm"]


def test_flow_csv_roundtrip(tmp_path, rng):
    mask = rng.uniform(size=(6, 8)) > 0.5
    fl = FlowField(np.where(mask, rng.normal(size=(6, 8)), 0), np.where(mask, rng.normal(size=(6, 8)), 0), mask)
    io.write_flow_csv(tmp_path / "f.csv", fl)
    back = io.read_flow_csv(tmp_path / "f.csv", (6, 8))
    assert np.array_equal(back.vx, fl.vx) and np.array_equal(back.vy, fl.vy) and np.array_equal(back.mask, mask)


def test_quiver_image_marks_vectors():
    fr = TactileFrame(np.full((32, 32), 0.5), None, "top-xy", (0, 1))
    fl = FlowField(np.full((32, 32), 1.0), np.zeros((32, 32)), np.ones((32, 32), bool))
    img = io.quiver_image(fr, fl, step=8)
    assert img.shape == (32, 32, 3)
    assert np.any(np.all(img == (255, 0, 0), axis=-1))


def test_segments_and_truth_roundtrip(tmp_path):
    segs = make_segments([50, 120], 10, 200)
    io.write_segments(tmp_path / "s.csv", segs)
    back = io.read_segments(tmp_path / "s.csv")
    assert [(s.label, s.start, s.end, s.anchor) for s in back] == [(s.label, s.start, s.end, s.anchor) for s in segs]
    _, gt = generate(Scenario(duration=1.0))
    io.write_truth(tmp_path / "t.csv", gt)
    g2 = io.read_truth(tmp_path / "t.csv")
    assert np.array_equal(g2.points, gt.points) and g2.events == gt.events
