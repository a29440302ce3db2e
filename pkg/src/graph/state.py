"""State management for the tileseg pipeline workflow."""
from typing import Annotated, Dict, List, TypedDict
from operator import add

from src.utils.config import RunConfig


def merge_artifacts(left: Dict[str, str], right: Dict[str, str]) -> Dict[str, str]:
    """Reducer: later stages add artifacts without dropping earlier ones."""
    return {**left, **right}


class State(TypedDict):
    """State schema for the pipeline workflow.

    Attributes:
        run_config: Configuration shared by every stage
        completed: Commands of the stages that finished
        artifacts: ``<command>.<name>`` to artifact path
        manifest_lines: Provenance notes collected from all stages
        current_stage: Most recently executed stage
        errors: Errors encountered; the first one stops the pipeline
    """

    # Input
    run_config: RunConfig

    # Stage outputs
    completed: Annotated[List[str], add]
    artifacts: Annotated[Dict[str, str], merge_artifacts]
    manifest_lines: Annotated[List[str], add]

    # Workflow state
    current_stage: str
    errors: Annotated[List[str], add]
