"""Workflow engine: manifests, the five components and the executor."""

from matagent.engine.components import (
    ALLOWED_ACTIONS,
    CommandResult,
    ComponentDeps,
    ExternalBackend,
    SimBackend,
    run_command,
    run_get_llm_answer,
    run_read_file,
    run_regex_extractor,
    run_write_file,
)
from matagent.engine.context import (
    COMPLETED,
    FAILED,
    RUN_RECORD,
    ExecutionContext,
    HistoryEntry,
    TaskRequest,
    TaskResult,
)
from matagent.engine.executor import execute_workflow, run_task, select_workflow, workflow_menu
from matagent.engine.workflow import (
    ABORT,
    COMPONENTS,
    RECORD_AND_CONTINUE,
    ContextRef,
    WorkflowDef,
    WorkflowStep,
    default_templates_text,
    load_library,
    load_workflow,
    workflow_from_dict,
)
from matagent.llm.prompts import TemplateLibrary


def default_templates() -> TemplateLibrary:
    return TemplateLibrary.from_yaml(default_templates_text())


__all__ = [
    "ABORT", "ALLOWED_ACTIONS", "COMPLETED", "COMPONENTS", "FAILED", "RECORD_AND_CONTINUE", "RUN_RECORD",
    "CommandResult", "ComponentDeps", "ContextRef", "ExecutionContext", "ExternalBackend", "HistoryEntry",
    "SimBackend", "TaskRequest", "TaskResult", "WorkflowDef", "WorkflowStep",
    "default_templates", "default_templates_text", "execute_workflow", "load_library", "load_workflow",
    "run_command", "run_get_llm_answer", "run_read_file", "run_regex_extractor", "run_task",
    "run_write_file", "select_workflow", "workflow_from_dict", "workflow_menu",
]
