import json
import re

import pytest

from guidepath.cli import EXIT_INFEASIBLE, EXIT_INPUT, EXIT_MISMATCH, EXIT_OK, EXIT_RUN_FAILED, main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def staged(tmp_path_factory):
    """demo-env, plan and synthesize once for the module."""
    d = tmp_path_factory.mktemp("staged")
    assert main(["demo-env", "--out-dir", str(d)]) == 0
    assert main(["plan", "--env", str(d / "demo_env.json"), "--out-dir", str(d)]) == 0
    assert main(["synthesize", "--env", str(d / "demo_env.json"), "--tree", str(d / "simplified_tree.json"), "--out-dir", str(d)]) == 0
    return d


def files(d):
    return d / "demo_env.json", d / "simplified_tree.json", d / "gains.json"


def test_plan_outputs(staged, capsys, tmp_path):
    raw = json.loads((staged / "raw_tree.json").read_text())
    simp = json.loads((staged / "simplified_tree.json").read_text())
    assert len(simp["nodes"]) < len(raw["nodes"])
    assert simp["params"]["seed"] == 7 and "sha256" not in simp["provenance"]
    assert len(simp["provenance"]["inputs"]["env"]) == 64
    code, out, _ = run(capsys, "plan", "--env", staged / "demo_env.json", "--out-dir", tmp_path)
    assert code == EXIT_OK
    assert re.search(r"^raw_nodes,\d+$", out, re.M) and re.search(r"^simplified_nodes,\d+$", out, re.M)
    for name in ("raw_tree.json", "simplified_tree.json"):
        assert (tmp_path / name).read_bytes() == (staged / name).read_bytes()


def test_plan_other_seed_differs(staged, capsys, tmp_path):
    code, _, _ = run(capsys, "plan", "--env", staged / "demo_env.json", "--seed", 8, "--max-itr", 300, "--out-dir", tmp_path)
    assert code == EXIT_OK
    assert (tmp_path / "raw_tree.json").read_bytes() != (staged / "raw_tree.json").read_bytes()


@pytest.mark.parametrize("extra", [["--max-itr", "0"], ["--eta", "-1"], ["--root", "1,2,3"]])
def test_plan_bad_arguments(staged, capsys, tmp_path, extra):
    code, _, err = run(capsys, "plan", "--env", staged / "demo_env.json", "--out-dir", tmp_path, *extra)
    assert code == EXIT_INPUT and err


def test_plan_missing_env(capsys, tmp_path):
    code, _, err = run(capsys, "plan", "--env", tmp_path / "nope.json", "--out-dir", tmp_path)
    assert code == EXIT_INPUT and err


def test_plan_root_in_obstacle(staged, capsys, tmp_path):
    env = json.loads((staged / "demo_env.json").read_text())
    c = env["obstacles"][0]["params"]["center"]
    code, _, _ = run(capsys, "plan", "--env", staged / "demo_env.json", "--root", f"{c[0]},{c[1]}", "--out-dir", tmp_path)
    assert code == EXIT_INPUT


def test_synthesize_outputs(staged):
    g = json.loads((staged / "gains.json").read_text())
    tree = json.loads((staged / "simplified_tree.json").read_text())
    assert g["verified"] and len(g["edges"]) == len(tree["nodes"]) - 1
    assert all(e["S_V"] <= 0 for e in g["edges"])
    assert set(g["provenance"]["inputs"]) == {"env", "tree"}


def test_verify_only(staged, capsys, tmp_path):
    env, tree, gains = files(staged)
    code, out, _ = run(capsys, "synthesize", "--env", env, "--tree", tree, "--verify-only", gains, "--out-dir", tmp_path)
    assert code == EXIT_OK
    doc = json.loads(gains.read_text())
    e = doc["edges"][0]
    e["K"] = [0.0 for _ in e["K"]]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "synthesize", "--env", env, "--tree", tree, "--verify-only", bad, "--out-dir", tmp_path)
    assert code == EXIT_INFEASIBLE
    assert f"{e['i']}-{e['j']}" in out


def test_synthesize_infeasible_names_every_edge(staged, capsys, tmp_path):
    env, tree, _ = files(staged)
    code, out, _ = run(capsys, "synthesize", "--env", env, "--tree", tree, "--u-max", "1e-9", "--input-sides", 4, "--out-dir", tmp_path)
    assert code == EXIT_INFEASIBLE
    n_edges = len(json.loads(tree.read_text())["nodes"]) - 1
    assert len(re.findall(r"^infeasible,\d+-\d+$", out, re.M)) == n_edges
    assert not (tmp_path / "gains.json").exists()


def test_synthesize_tree_mismatch(staged, capsys, tmp_path):
    env, tree, gains = files(staged)
    other = tmp_path / "env.json"
    d = json.loads(env.read_text())
    d["seed"] = 8
    other.write_text(json.dumps(d))
    code, _, _ = run(capsys, "synthesize", "--env", other, "--tree", tree, "--out-dir", tmp_path)
    assert code == EXIT_MISMATCH
    code, _, _ = run(capsys, "simulate", "--env", other, "--tree", tree, "--gains", gains, "--preset", 0, "--out-dir", tmp_path)
    assert code == EXIT_MISMATCH


def test_simulate_presets(staged, capsys, tmp_path):
    env, tree, gains = files(staged)
    code, out, _ = run(capsys, "simulate", "--env", env, "--tree", tree, "--gains", gains, "--preset", "all", "--out-dir", tmp_path)
    assert code == EXIT_OK
    lines = out.strip().splitlines()
    assert lines[0] == "run,start_x,start_y,outcome,time,path_length,file"
    assert len(lines) == 5 and all(",success," in ln for ln in lines[1:])
    for k in range(4):
        assert (tmp_path / f"trajectory_{k}.csv").exists()


def test_simulate_rotate30_and_single_out(staged, capsys, tmp_path):
    env, tree, gains = files(staged)
    out_csv = tmp_path / "one.csv"
    code, out, _ = run(capsys, "simulate", "--env", env, "--tree", tree, "--gains", gains, "--start", "4.3,4.3", "--deform", "rotate30", "--out", out_csv)
    assert code == EXIT_OK and out_csv.exists()


def test_simulate_failure_exit(staged, capsys, tmp_path):
    env, tree, gains = files(staged)
    code, out, _ = run(capsys, "simulate", "--env", env, "--tree", tree, "--gains", gains, "--preset", 0, "--max-time", 0.5, "--out-dir", tmp_path)
    assert code == EXIT_RUN_FAILED and ",timeout," in out


def test_simulate_start_in_obstacle(staged, capsys, tmp_path):
    env, tree, gains = files(staged)
    c = json.loads(env.read_text())["obstacles"][0]["params"]["center"]
    code, out, err = run(capsys, "simulate", "--env", env, "--tree", tree, "--gains", gains, "--start", f"{c[0]},{c[1]}", "--out-dir", tmp_path)
    assert code == EXIT_INPUT and out == "" and err


def test_render(staged, capsys, tmp_path):
    env, tree, gains = files(staged)
    run(capsys, "simulate", "--env", env, "--tree", tree, "--gains", gains, "--preset", 1, "--out", tmp_path / "t.csv")
    svg = tmp_path / "m.svg"
    png = tmp_path / "m.png"
    code, _, _ = run(capsys, "render", "--env", env, "--tree", tree, "--trajectory", tmp_path / "t.csv", "--out", svg, "--figure", png)
    assert code == EXIT_OK
    text = svg.read_text()
    n_edges = len(json.loads(tree.read_text())["nodes"]) - 1
    assert text.count('<path id="edge-') == n_edges
    rows = [ln for ln in (tmp_path / "t.csv").read_text().splitlines() if ln and not ln.startswith(("#", "t,"))]
    pts = re.search(r'<polyline id="trajectory-0" points="([^"]*)"', text).group(1).split(" ")
    assert len(pts) == len(rows)
    assert png.stat().st_size > 0


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.strip()


def test_report_matches_stages(staged, capsys, tmp_path):
    code, out, _ = run(capsys, "report", "--env", staged / "demo_env.json", "--out-dir", tmp_path)
    assert code == EXIT_OK
    for name in ("raw_tree.json", "simplified_tree.json"):
        assert (tmp_path / name).read_bytes() == (staged / name).read_bytes()
    a = json.loads((tmp_path / "gains.json").read_text())
    b = json.loads((staged / "gains.json").read_text())
    a.pop("provenance"), b.pop("provenance")  # the env path differs, hashes do not
    assert a == b
    summary = (tmp_path / "summary.csv").read_text().splitlines()
    assert summary[0].startswith("scenario,start")
    assert len(summary) == 1 + 3 * 4
    for name in ("original", "rotate30", "unicycle-fov30"):
        assert (tmp_path / f"{name}.svg").exists() and (tmp_path / f"{name}.png").exists()
