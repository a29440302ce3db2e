"""Graph package for the LangGraph pipeline workflow."""

from src.graph.repeats import RepeatedRuns
from src.graph.state import State
from src.graph.workflow import PipelineWorkflow

__all__ = ["State", "PipelineWorkflow", "RepeatedRuns"]
