"""Workflow-driven tool orchestration.

A coordination graph ties workflow steps to toolsets, data-exchange links,
and view layouts; entering a step activates the right tools, transfers the
right data, arranges views, and journals provenance for later result
composition.
"""

from .compose import (
    PlacedCapture,
    SummaryComposition,
    export_composite,
    list_intermediate_results,
    place_capture,
)
from .data import (
    BlobData,
    DataArtifact,
    FilterRows,
    FromDelimitedText,
    RenameColumn,
    SelectColumns,
    TabularData,
    ToDelimitedText,
    TransformPipeline,
    apply_pipeline,
    validate_pipeline,
)
from .engine import ExecutionEngine, compute_activation_diff, replay
from .graph import (
    CoordinationGraph,
    CoordinationLink,
    DataFlowSpec,
    DataSourceBinding,
    LaunchSpec,
    LinkKind,
    StepBinding,
    ToolDescriptor,
    Toolset,
    add_link,
    derive_required_links,
    parse_graph,
    remove_link,
    toolset_for_step,
    validate_graph,
)
from .host import SubprocessToolHost
from .journal import ActivationRecord, Capture, Note, Session, StepStatus, TransferRecord
from .layout import (
    LayoutAssignment,
    LayoutStore,
    LayoutTemplate,
    Region,
    TemplateKind,
    compute_regions,
    default_template,
)
from .project import Project, load_project, save_project
from .transfer import execute_transfer
from .workflow import (
    Stage,
    WorkflowSpec,
    WorkflowStep,
    parse_workflow,
    predecessors,
    successors,
    validate_workflow,
)

__version__ = "0.1.0"
