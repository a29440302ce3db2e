"""LangGraph workflow running every pipeline stage in order."""
from typing import Dict, Sequence, Type

from langgraph.graph import END, StateGraph

from src.graph.state import State
from src.stages import PIPELINE, BaseStage
from src.utils.config import RunConfig
from src.utils.logger import logger


class PipelineWorkflow:
    """LangGraph workflow chaining the stages; stops at the first failure."""

    def __init__(self, stages: Sequence[Type[BaseStage]] = PIPELINE):
        """Initialize workflow with one instance per stage class."""
        self.logger = logger
        self.stages = [stage() for stage in stages]

        # Build workflow graph
        self.graph = self._build_graph()

    def _build_graph(self):
        """Build LangGraph workflow.

        Returns:
            Compiled StateGraph
        """
        workflow = StateGraph(State)

        for stage in self.stages:
            workflow.add_node(stage.command, stage.execute)

        workflow.set_entry_point(self.stages[0].command)
        for current, following in zip(self.stages, self.stages[1:]):
            workflow.add_conditional_edges(
                current.command,
                self._route,
                {"continue": following.command, "stop": END},
            )
        workflow.add_edge(self.stages[-1].command, END)

        return workflow.compile()

    @staticmethod
    def _route(state: Dict) -> str:
        return "stop" if state.get("errors") else "continue"

    def execute(self, run_config: RunConfig) -> Dict:
        """Run all stages.

        Args:
            run_config: Configuration of the run

        Returns:
            Final state with completed stages, artifacts and errors
        """
        self.logger.info(f"Starting pipeline in {run_config.out_dir}")

        initial_state = {
            "run_config": run_config,
            "completed": [],
            "artifacts": {},
            "manifest_lines": [],
            "current_stage": "",
            "errors": [],
        }

        final_state = self.graph.invoke(initial_state)

        if final_state.get("errors"):
            self.logger.warning(
                f"Pipeline stopped at {final_state['current_stage']}: {final_state['errors'][0]}"
            )
        else:
            self.logger.info(f"✓ Pipeline completed {len(final_state['completed'])} stage(s)")
        return final_state
