"""Workflow selection and step-by-step execution."""

from __future__ import annotations

import logging
import time

from matagent.engine.components import (
    CommandResult,
    ComponentDeps,
    run_command,
    run_get_llm_answer,
    run_read_file,
    run_regex_extractor,
    run_write_file,
)
from matagent.engine.context import COMPLETED, FAILED, ExecutionContext, HistoryEntry, TaskRequest, TaskResult
from matagent.engine.workflow import RECORD_AND_CONTINUE, ContextRef, WorkflowDef
from matagent.errors import MatAgentError, MissingInputs, NoMatchingWorkflow, StepFailed, WorkflowError

log = logging.getLogger(__name__)

SELECT_TEMPLATE = "select_workflow"


def _resolve(bindings: dict, ctx: ExecutionContext) -> dict:
    return {k: ctx.get(v.key) if isinstance(v, ContextRef) else v for k, v in bindings.items()}


def _invoke(component: str, args: dict, ctx: ExecutionContext, deps: ComponentDeps, client):
    args = dict(args)
    try:
        if component == "ReadFile":
            return run_read_file(args.pop("path"), ctx)
        if component == "WriteFile":
            return run_write_file(args.pop("path"), args.pop("content"), ctx)
        if component == "Command":
            return run_command(args.pop("cmd"), ctx, deps, **args)
        if component == "RegexExtractor":
            return run_regex_extractor(args.pop("source"), **args)
        if component == "GetLLMAnswer":
            return run_get_llm_answer(args.pop("template"), ctx, deps, client)
    except KeyError as exc:
        if isinstance(exc, MatAgentError):
            raise
        raise WorkflowError(f"{component} is missing binding {exc}") from None
    except TypeError as exc:
        raise WorkflowError(f"{component}: bad bindings ({exc})") from None
    raise WorkflowError(f"unknown component {component!r}")


def _command_message(res: CommandResult) -> str:
    parts = [res.status or f"exit {res.exit_code}"]
    if res.stderr:
        parts.append(res.stderr.strip().splitlines()[0])
    return ": ".join(parts)


def _report(wf: WorkflowDef, ctx: ExecutionContext, status: str) -> str:
    lines = [f"workflow {wf.id}: {status}"]
    for h in ctx.history:
        tail = f" ({h.message})" if h.message else ""
        lines.append(f"  step {h.step} {h.component} -> {h.output_key}: {h.outcome}{tail}")
    progress = ctx.simulation_state.get("progress")
    if progress:
        lines += ["", progress]
    return "\n".join(lines) + "\n"


def execute_workflow(wf: WorkflowDef, request: TaskRequest, ctx: ExecutionContext, deps: ComponentDeps,
                     client=None) -> TaskResult:
    """Run every step of ``wf`` in order against ``ctx``.

    A step fails when its component raises or a command exits nonzero.
    ``Abort`` stops the run; ``RecordAndContinue`` stores the partial output
    (or ``None``) under the step's key and moves on.
    """
    missing = [r for r in wf.required_inputs if r not in request.input_files]
    if missing:
        raise MissingInputs(wf.id, missing)
    client = client if client is not None else deps.llm.for_run(request.run_id)
    ctx.set("request_text", request.request_text)
    for role in wf.required_inputs:
        ctx.set(role, request.input_files[role])
    for name, value in wf.parameters.items():
        ctx.set(name, value)

    for k, step in enumerate(wf.steps, start=1):
        t0 = time.perf_counter()
        value, error = None, None
        try:
            value = _invoke(step.component, _resolve(step.bindings, ctx), ctx, deps, client)
            if isinstance(value, CommandResult):
                if value.action == "run_backend" and value.stdout:
                    ctx.note(f"{step.output_key}: {value.stdout.strip()}")
                if not value.ok:
                    error = _command_message(value)
        except MatAgentError as exc:
            error = f"{type(exc).__name__}: {exc}"
        elapsed = time.perf_counter() - t0

        if error is None:
            ctx.set(step.output_key, value)
            ctx.record(HistoryEntry(k, step.component, step.output_key, "ok", elapsed))
            continue
        if step.on_error == RECORD_AND_CONTINUE:
            log.info("%s step %d failed, continuing: %s", wf.id, k, error)
            ctx.set(step.output_key, value)
            ctx.record(HistoryEntry(k, step.component, step.output_key, "recorded", elapsed, error))
            continue
        log.info("%s step %d failed: %s", wf.id, k, error)
        ctx.record(HistoryEntry(k, step.component, step.output_key, "failed", elapsed, error))
        failure = StepFailed(k, step.component, error)
        ctx.write_run_record(wf.id, FAILED, {"failed_step": k, "error": str(failure)})
        return TaskResult(FAILED, dict(ctx.values), _report(wf, ctx, FAILED), wf.id, k, str(failure),
                          tuple(ctx.history))

    ctx.write_run_record(wf.id, COMPLETED)
    return TaskResult(COMPLETED, dict(ctx.values), _report(wf, ctx, COMPLETED), wf.id, None, None,
                      tuple(ctx.history))


def _match(answer: str, library) -> WorkflowDef | None:
    key = answer.strip().strip("`'\". ").lower()
    for wf in library:
        if key in (wf.id.lower(), wf.task_type.lower()):
            return wf
    return None


def workflow_menu(library) -> str:
    return "\n".join(f"- {wf.id}: {wf.objective}" for wf in library)


def select_workflow(request: TaskRequest, library, deps: ComponentDeps, client) -> WorkflowDef:
    """Pick the workflow for a request.

    A task hint naming a workflow id or task type wins. Otherwise the model
    chooses from the library menu; an unknown name earns one more attempt.
    """
    if not library:
        raise NoMatchingWorkflow("the workflow library is empty")
    if request.task_hint:
        wf = _match(request.task_hint, library)
        if wf is None:
            raise NoMatchingWorkflow(f"no workflow matches hint {request.task_hint!r}")
        return wf
    values = {"request_text": request.request_text, "workflow_menu": workflow_menu(library)}
    answers = []
    for _ in range(2):
        answer = run_get_llm_answer(SELECT_TEMPLATE, values, deps, client)
        answers.append(answer)
        wf = _match(answer, library)
        if wf is not None:
            return wf
    raise NoMatchingWorkflow(f"model answers {answers} name no workflow in the library")


def run_task(request: TaskRequest, working_dir, library, deps: ComponentDeps) -> TaskResult:
    """Select, check inputs and execute; the working directory must exist."""
    client = deps.llm.for_run(request.run_id)
    wf = select_workflow(request, library, deps, client)
    ctx = ExecutionContext(working_dir)
    return execute_workflow(wf, request, ctx, deps, client)
