import json

import pytest

from obbeval.cli import main

CATEGORIES = ["plane", "ship"]


@pytest.fixture
def workspace(tmp_path):
    """GT directory with three images plus a categories file."""
    gt_dir = tmp_path / "gt"
    gt_dir.mkdir()
    (gt_dir / "img001.txt").write_text(
        "100 100 200 100 200 180 100 180 ship 0\n"
        "300 300 380 300 380 360 300 360 plane 0\n"
    )
    (gt_dir / "img002.txt").write_text("500 500 560 500 560 580 500 580 ship 1\n")
    (gt_dir / "img003.txt").write_text("")  # background patch
    cats = tmp_path / "categories.txt"
    cats.write_text("\n".join(CATEGORIES) + "\n")
    return tmp_path, gt_dir, cats


def run(argv):
    return main([str(a) for a in argv])


class TestEncodeDecode:
    def test_encode_one_line_per_image(self, workspace):
        tmp, gt_dir, cats = workspace
        out = tmp / "responses.tsv"
        assert run(["encode", "--gt-dir", gt_dir, "--categories", cats, "--out", out]) == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 3
        ids = [ln.split("\t")[0] for ln in lines]
        assert ids == ["img001", "img002", "img003"]
        assert lines[2].endswith("\t")  # empty response for background patch

    def test_unknown_category_fails(self, workspace, capsys):
        tmp, gt_dir, cats = workspace
        (gt_dir / "img004.txt").write_text("0 0 1 0 1 1 0 1 submarine 0\n")
        rc = run(["encode", "--gt-dir", gt_dir, "--categories", cats, "--out", tmp / "x"])
        assert rc == 1
        assert "submarine" in capsys.readouterr().err

    def test_roundtrip_decode(self, workspace):
        tmp, gt_dir, cats = workspace
        responses = tmp / "responses.tsv"
        detections = tmp / "detections.tsv"
        run(["encode", "--gt-dir", gt_dir, "--categories", cats, "--out", responses])
        assert (
            run(
                [
                    "decode",
                    "--responses",
                    responses,
                    "--categories",
                    cats,
                    "--out",
                    detections,
                ]
            )
            == 0
        )
        lines = detections.read_text().splitlines()
        assert len(lines) == 3  # 3 boxes across images; img003 contributes none
        assert all(line.split()[-1] == "1.000000" for line in lines)
        warnings = json.loads((tmp / "detections.tsv.warnings.json").read_text())
        assert list(warnings) == ["img003"]  # empty-response only

    def test_decode_garbage_line_warns(self, workspace):
        tmp, _gt, cats = workspace
        responses = tmp / "responses.tsv"
        responses.write_text("imgX\ttotal nonsense\nimgY\tship" + "<loc_5>" * 7 + "\n")
        out = tmp / "out.tsv"
        assert run(["decode", "--responses", responses, "--categories", cats, "--out", out]) == 0
        assert out.read_text() == ""
        warnings = json.loads((tmp / "out.tsv.warnings.json").read_text())
        assert warnings["imgY"][0]["kind"] == "dangling-coordinates"


class TestEval:
    def _roundtrip(self, workspace):
        tmp, gt_dir, cats = workspace
        responses = tmp / "responses.tsv"
        detections = tmp / "detections.tsv"
        run(["encode", "--gt-dir", gt_dir, "--categories", cats, "--out", responses])
        run(["decode", "--responses", responses, "--categories", cats, "--out", detections])
        return tmp, gt_dir, cats, detections

    def test_perfect_predictions(self, workspace, capsys):
        tmp, gt_dir, cats, detections = self._roundtrip(workspace)
        out_json = tmp / "report.json"
        rc = run(
            [
                "eval",
                "--pred",
                detections,
                "--gt-dir",
                gt_dir,
                "--categories",
                cats,
                "--out-json",
                out_json,
                "--out-csv",
                tmp / "report.csv",
            ]
        )
        assert rc == 0
        report = json.loads(out_json.read_text())
        assert report["map_nc_mean"] == pytest.approx(1.0)
        assert report["mf1"] == pytest.approx(1.0)
        assert len(report["map_nc_runs"]) == 11

    def test_unknown_image_id_rejected(self, workspace, capsys):
        tmp, gt_dir, cats, detections = self._roundtrip(workspace)
        with detections.open("a") as fh:
            fh.write("imgZZZ\t0 0 1 0 1 1 0 1 ship 1.0\n")
        rc = run(["eval", "--pred", detections, "--gt-dir", gt_dir, "--categories", cats])
        assert rc == 1
        assert "imgZZZ" in capsys.readouterr().err

    def test_sweep_rejected_without_informative_confidence(self, workspace, capsys):
        tmp, gt_dir, cats, detections = self._roundtrip(workspace)
        rc = run(
            ["eval", "--pred", detections, "--gt-dir", gt_dir, "--categories", cats, "--sweep"]
        )
        assert rc == 1
        assert "confidence" in capsys.readouterr().err

    def test_byte_identical_reports_across_runs(self, workspace):
        tmp, gt_dir, cats, detections = self._roundtrip(workspace)
        outs = []
        for name in ("r1.json", "r2.json"):
            run(
                [
                    "eval",
                    "--pred",
                    detections,
                    "--gt-dir",
                    gt_dir,
                    "--categories",
                    cats,
                    "--seed",
                    "7",
                    "--out-json",
                    tmp / name,
                ]
            )
            outs.append((tmp / name).read_bytes())
        assert outs[0] == outs[1]


class TestMerge:
    def test_balanced_manifest(self, workspace, tmp_path):
        tmp, gt_dir, cats = workspace
        gt2 = tmp / "gt2"
        gt2.mkdir()
        (gt2 / "a.txt").write_text("0 0 10 0 10 10 0 10 plane 0\n")
        manifest_path = tmp / "manifest.json"
        rc = run(
            [
                "merge",
                gt_dir,
                gt2,
                "--categories",
                cats,
                "--strategy",
                "balanced",
                "--out-manifest",
                manifest_path,
            ]
        )
        assert rc == 0
        manifest = json.loads(manifest_path.read_text())
        assert manifest["strategy"] == "balanced"
        assert [s["repetition"] for s in manifest["sources"]] == [1, 3]
        assert manifest["size"] == 3 + 3 * 1


class TestRender:
    def test_svg_per_image(self, workspace):
        tmp, gt_dir, cats = workspace
        responses = tmp / "responses.tsv"
        detections = tmp / "detections.tsv"
        run(["encode", "--gt-dir", gt_dir, "--categories", cats, "--out", responses])
        run(["decode", "--responses", responses, "--categories", cats, "--out", detections])
        out_dir = tmp / "svg"
        assert run(["render", "--detections", detections, "--out-dir", out_dir]) == 0
        svgs = sorted(p.name for p in out_dir.glob("*.svg"))
        assert svgs == ["img001.svg", "img002.svg"]
        img1 = (out_dir / "img001.svg").read_text()
        assert img1.count("<polygon") == 2
        assert img1.count('class="legend"') == 2  # one entry per category

    def test_empty_detections_file(self, workspace):
        tmp, _gt, _cats = workspace
        det_file = tmp / "empty.tsv"
        det_file.write_text("")
        out_dir = tmp / "svg2"
        assert run(["render", "--detections", det_file, "--out-dir", out_dir]) == 0
        assert list(out_dir.glob("*.svg")) == []
