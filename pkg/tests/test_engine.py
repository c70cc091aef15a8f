import json

import numpy as np
import pytest

from matagent import errors
from matagent.engine import (
    COMPLETED,
    FAILED,
    RUN_RECORD,
    CommandResult,
    ComponentDeps,
    ContextRef,
    ExecutionContext,
    TaskRequest,
    default_templates,
    execute_workflow,
    load_library,
    run_command,
    run_get_llm_answer,
    run_read_file,
    run_regex_extractor,
    run_task,
    run_write_file,
    select_workflow,
    workflow_from_dict,
)
from matagent.llm import MockClient, MockScript
from matagent.llm.prompts import TemplateLibrary, templates_from_yaml
from matagent.vasp_files import parse_incar
from matagent.vasp_files.outcar import format_nebef
from matagent.vasp_files.poscar import parse_poscar, write_poscar
from matagent.vasp_files.potcar import make_potcar_stub
from matagent.vasp_files.structure import CrystalStructure

GOOD_DECK = "```\nIBRION = 2\nNSW = 100\nPOTIM = 0.5\nEDIFFG = -0.01\n```"
SELECT_SR = "=== select_workflow ===\n```structure_relaxation```\n"


def dimer(d=2.6, box=12.0):
    pos = np.array([[1.0, 1.0, 1.0], [1.0 + d, 1.0, 1.0]])
    return CrystalStructure("Cu2", 1.0, np.eye(3) * box, ["Cu"], [2], pos, "Cartesian")


def sr_request(**kw):
    files = {"POSCAR": write_poscar(dimer()), "KPOINTS": "auto\n0\nGamma\n1 1 1\n",
             "POTCAR": make_potcar_stub(["Cu"])}
    return TaskRequest("Relax this copper dimer.", files, **kw)


def deps_for(script_text):
    return ComponentDeps(MockClient(MockScript.parse(script_text)), default_templates())


@pytest.fixture
def ctx(tmp_path):
    return ExecutionContext(tmp_path)


# -- manifests ----------------------------------------------------------------------


def manifest(steps, **kw):
    return {"id": "w", "objective": "o", "required_inputs": ["POSCAR"], "steps": steps, **kw}


def test_bundled_library_loads():
    lib = load_library()
    assert sorted(w.task_type for w in lib) == ["AE", "BS", "SR", "TS"]
    templates = default_templates()
    for wf in lib:
        for step in wf.steps:
            if step.component == "GetLLMAnswer":
                assert step.bindings["template"] in templates


@pytest.mark.parametrize("steps", [
    [],
    [{"component": "Shell", "output_key": "a"}],
    [{"component": "ReadFile", "bindings": {"path": "$nope"}, "output_key": "a"}],
    [{"component": "ReadFile", "bindings": {"path": "x"}, "output_key": "a"},
     {"component": "ReadFile", "bindings": {"path": "y"}, "output_key": "a"}],
    [{"component": "ReadFile", "bindings": {"path": "x"}, "output_key": "a", "on_error": "Ignore"}],
    [{"component": "ReadFile", "bindings": {"path": "$b"}, "output_key": "a"},
     {"component": "ReadFile", "bindings": {"path": "x"}, "output_key": "b"}],
])
def test_invalid_manifests_are_rejected(steps):
    with pytest.raises(errors.ManifestError):
        workflow_from_dict(manifest(steps))


def test_manifest_missing_field():
    with pytest.raises(errors.ManifestError):
        workflow_from_dict({"id": "w", "steps": []})


def test_binding_references_and_escapes():
    wf = workflow_from_dict(manifest([
        {"component": "WriteFile", "bindings": {"path": "$$lit", "content": "$POSCAR"}, "output_key": "a"}]))
    b = wf.steps[0].bindings
    assert b["path"] == "$lit" and b["content"] == ContextRef("POSCAR")


def test_duplicate_ids_in_library(tmp_path):
    for name in ("a", "b"):
        (tmp_path / f"{name}.workflow.yaml").write_text(
            "id: same\nobjective: o\nsteps:\n  - {component: Command, bindings: {cmd: noop}, output_key: x}\n")
    with pytest.raises(errors.ManifestError):
        load_library(tmp_path)


# -- context ------------------------------------------------------------------------


def test_context_is_write_once(ctx):
    ctx.set("a", 1)
    with pytest.raises(errors.WorkflowError):
        ctx.set("a", 2)
    with pytest.raises(errors.ContextKeyError):
        ctx.get("b")
    with pytest.raises(TypeError):
        ctx.values["c"] = 3


@pytest.mark.parametrize("path", ["../x", "/etc/passwd", "~/x", "a/../../x", ""])
def test_paths_cannot_escape(ctx, path):
    with pytest.raises(errors.PathEscape):
        ctx.resolve_path(path)


def test_symlink_escape_is_caught(ctx, tmp_path_factory):
    outside = tmp_path_factory.mktemp("outside")
    (ctx.working_dir / "link").symlink_to(outside)
    with pytest.raises(errors.PathEscape):
        ctx.resolve_path("link/file")


# -- components -----------------------------------------------------------------------


def test_read_and_write_files(ctx):
    assert run_write_file("sub/INCAR", parse_incar("ENCUT = 400"), ctx) == "sub/INCAR"
    assert run_read_file("sub/INCAR", ctx) == "ENCUT = 400\n"
    run_write_file("POSCAR", dimer(), ctx)
    assert parse_poscar(run_read_file("POSCAR", ctx)).n_atoms == 2
    with pytest.raises(errors.FileNotFoundInWorkdir):
        run_read_file("missing", ctx)
    with pytest.raises(errors.WorkflowError):
        run_write_file("x", 42, ctx)


@pytest.mark.parametrize("cmd", ["rm -rf /", "vasp_std", "bash", None, ["run_backend"]])
def test_disallowed_commands(ctx, cmd):
    with pytest.raises(errors.DisallowedCommand):
        run_command(cmd, ctx, deps_for(""))


def test_noop_and_missing_directory(ctx):
    assert run_command("noop", ctx, deps_for("")).ok
    res = run_command("run_backend", ctx, deps_for(""), dir="nowhere")
    assert res.exit_code != 0 and res.status == "MissingInput"


def test_backend_missing_input_is_nonzero_exit(ctx):
    run_write_file("INCAR", "NSW = 0\n", ctx)
    res = run_command("run_backend", ctx, deps_for(""), dir=".")
    assert res.exit_code != 0 and "missing" in res.stderr


def test_backend_exception_becomes_crash(ctx, monkeypatch):
    deps = deps_for("")

    def boom(directory):
        raise RuntimeError("segfault")

    monkeypatch.setattr(deps.backend.impl, "run", boom)
    with pytest.raises(errors.BackendCrash):
        run_command("run_backend", ctx, deps, dir=".")


def test_neb_interpolate_command(ctx):
    a, b = dimer(2.6), dimer(3.0)
    run_write_file("is/POSCAR", a, ctx)
    run_write_file("is/INCAR", "IBRION = 2\n", ctx)
    run_write_file("fs/POSCAR", b, ctx)
    res = run_command("neb_interpolate", ctx, deps_for(""), initial="is/POSCAR", final="fs/POSCAR",
                      images=3, dir="neb")
    assert res.ok
    names = sorted(p.name for p in (ctx.working_dir / "neb").iterdir())
    assert names == ["00", "01", "02", "03", "04"]
    mid = parse_poscar(run_read_file("neb/02/POSCAR", ctx))
    assert np.isclose(np.linalg.norm(mid.cartesian()[1] - mid.cartesian()[0]), 2.8)
    assert run_read_file("neb/00/INCAR", ctx) == "IBRION = 2\n"


def test_neb_interpolate_cell_mismatch(ctx):
    run_write_file("is/POSCAR", dimer(box=12.0), ctx)
    run_write_file("fs/POSCAR", dimer(box=12.1), ctx)
    res = run_command("neb_interpolate", ctx, deps_for(""), initial="is/POSCAR", final="fs/POSCAR",
                      images=3, dir="neb")
    assert not res.ok and res.details["rule_id"] == "neb_cell_consistency"
    assert not (ctx.working_dir / "neb").exists()


OUTCAR = """ E-fermi :   5.2000     XC(G=0):  -0.0000     alpha+bet : -0.0000
  free  energy   TOTEN  =        -1.50000000 eV
  free  energy   TOTEN  =        -1.75000000 eV
 reached required accuracy - stopping structural energy minimisation
"""


def test_regex_extractor():
    out = run_regex_extractor(OUTCAR, ["final_energy", "converged"])
    assert dict(out) == {"final_energy": -1.75, "converged": True}
    with pytest.raises(TypeError):
        out["x"] = 1
    with pytest.raises(errors.MissingRequiredQuantity):
        run_regex_extractor("nothing here", ["final_energy"])
    assert run_regex_extractor("nothing here", ["fermi_energy"]) == {}
    custom = run_regex_extractor("NELECT = 12.0000", [{"name": "nelect", "pattern": r"NELECT\s*=\s*(\S+)"}])
    assert custom["nelect"] == 12.0


def test_regex_extractor_nebef():
    text = format_nebef([0.0, 0.01, 0.0], [-1.0, -0.6, -1.2])
    out = run_regex_extractor(text, format="nebef")
    assert np.isclose(out["barrier"], 0.4) and np.isclose(out["delta_e"], -0.2)


TPL = TemplateLibrary(templates_from_yaml("""
templates:
  t:
    answer: incar
    layers:
      task_instructions: "Relax {material}."
      format_constraint: "One fenced block."
"""))


def test_llm_answer_is_parsed_deck():
    deps = ComponentDeps(MockClient(MockScript.parse("=== t ===\n```\nENCUT = 450\n```\n")), TPL)
    deck = run_get_llm_answer("t", {"material": "Si"}, deps, deps.llm)
    assert deck.get("ENCUT") == 450


def test_llm_format_retry_succeeds():
    client = MockClient(MockScript.parse("=== t #0 ===\nJust set ENCUT to 450.\n=== t #1 ===\n```ENCUT = 450```\n"))
    deps = ComponentDeps(client, TPL)
    assert run_get_llm_answer("t", {"material": "Si"}, deps, client).get("ENCUT") == 450
    assert client.calls == [("t", 0), ("t", 1)]


def test_llm_format_retry_is_bounded():
    client = MockClient(MockScript.parse("=== t ===\nprose only\n"))
    deps = ComponentDeps(client, TPL)
    with pytest.raises(errors.FormatViolation):
        run_get_llm_answer("t", {"material": "Si"}, deps, client)
    assert len(client.calls) == 2


def test_unresolved_slot_fails_before_any_call():
    client = MockClient(MockScript.parse("=== default ===\n```A = 1```\n"))
    deps = ComponentDeps(client, TPL)
    with pytest.raises(errors.UnresolvedSlot):
        run_get_llm_answer("t", {}, deps, client)
    assert client.calls == []


# -- executor -------------------------------------------------------------------------


def test_structure_relaxation_runs(tmp_path):
    res = run_task(sr_request(), tmp_path, load_library(), deps_for(SELECT_SR + "=== sr_params ===\n" + GOOD_DECK))
    assert res.status == COMPLETED and res.workflow_id == "structure_relaxation"
    assert res.outputs["relax_run"].status == "ConvergedOk"
    assert res.outputs["energies"]["converged"] is True
    record = json.loads((tmp_path / RUN_RECORD).read_text())
    assert record["status"] == COMPLETED and len(record["history"]) == 9
    assert [h.step for h in res.history] == list(range(1, 10))


def test_failed_step_aborts(tmp_path):
    script = SELECT_SR + "=== sr_params ===\n```\nIBRION = 2\nNSW = 10\nPOTIM = 0.5\nFOO = 1\n```\n"
    res = run_task(sr_request(), tmp_path, load_library(), deps_for(script))
    assert res.status == FAILED and res.failed_step == 6
    assert "ValidationFailed" in res.error
    assert "outcar" not in res.outputs
    assert json.loads((tmp_path / RUN_RECORD).read_text())["failed_step"] == 6


def test_record_and_continue(tmp_path):
    wf = workflow_from_dict(manifest([
        {"component": "ReadFile", "bindings": {"path": "nope"}, "output_key": "a", "on_error": "RecordAndContinue"},
        {"component": "WriteFile", "bindings": {"path": "P", "content": "$POSCAR"}, "output_key": "b"},
    ]))
    res = execute_workflow(wf, TaskRequest("r", {"POSCAR": "x"}), ExecutionContext(tmp_path), deps_for(""))
    assert res.status == COMPLETED
    assert [h.outcome for h in res.history] == ["recorded", "ok"]
    assert res.outputs["a"] is None and "FileNotFoundInWorkdir" in res.history[0].message


def test_missing_inputs(tmp_path):
    req = TaskRequest("r", {"POSCAR": "x"}, task_hint="SR")
    with pytest.raises(errors.MissingInputs) as info:
        run_task(req, tmp_path, load_library(), deps_for(""))
    assert set(info.value.missing) == {"KPOINTS", "POTCAR"}


def test_escape_in_manifest_fails_the_step(tmp_path):
    wf = workflow_from_dict(manifest([
        {"component": "WriteFile", "bindings": {"path": "../evil", "content": "x"}, "output_key": "a"}]))
    res = execute_workflow(wf, TaskRequest("r", {"POSCAR": "x"}), ExecutionContext(tmp_path), deps_for(""))
    assert res.status == FAILED and "PathEscape" in res.error
    assert not (tmp_path.parent / "evil").exists()


def test_command_result_is_recorded(tmp_path):
    wf = workflow_from_dict(manifest([
        {"component": "Command", "bindings": {"cmd": "noop"}, "output_key": "a"}]))
    res = execute_workflow(wf, TaskRequest("r", {"POSCAR": "x"}), ExecutionContext(tmp_path), deps_for(""))
    assert isinstance(res.outputs["a"], CommandResult) and res.completed


# -- selection ------------------------------------------------------------------------


def test_hint_overrides_model():
    client = MockClient(MockScript.parse(""))
    wf = select_workflow(sr_request(task_hint="BS"), load_library(), deps_for(""), client)
    assert wf.id == "band_structure" and client.calls == []


def test_model_selection_with_one_retry():
    script = "=== select_workflow #0 ===\n```geometry_optimisation```\n=== select_workflow #1 ===\n```SR```\n"
    deps = deps_for(script)
    assert select_workflow(sr_request(), load_library(), deps, deps.llm).id == "structure_relaxation"


def test_no_matching_workflow():
    deps = deps_for("=== select_workflow ===\n```phonons```\n")
    with pytest.raises(errors.NoMatchingWorkflow):
        select_workflow(sr_request(), load_library(), deps, deps.llm)
    with pytest.raises(errors.NoMatchingWorkflow):
        select_workflow(sr_request(task_hint="XYZ"), load_library(), deps, deps.llm)
    with pytest.raises(errors.NoMatchingWorkflow):
        select_workflow(sr_request(), [], deps, deps.llm)


def test_runs_are_deterministic(tmp_path):
    script = SELECT_SR + "=== sr_params ===\n" + GOOD_DECK
    outs = []
    for k in range(2):
        d = tmp_path / str(k)
        d.mkdir()
        run_task(sr_request(), d, load_library(), deps_for(script))
        outs.append({p.name: p.read_bytes() for p in d.iterdir() if p.name != RUN_RECORD})
    assert outs[0] == outs[1]
