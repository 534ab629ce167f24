"""Progress display for experiment jobs using rich."""

import logging
from typing import Optional

try:
    from rich.console import Console
    from rich.progress import (
        BarColumn,
        MofNCompleteColumn,
        Progress,
        SpinnerColumn,
        TextColumn,
        TimeElapsedColumn,
        TimeRemainingColumn,
    )
    RICH_AVAILABLE = True
except ImportError:
    RICH_AVAILABLE = False

logger = logging.getLogger(__name__)


class RunProgress:
    """Progress over (algorithm, seed) jobs; silent when disabled."""

    def __init__(self, total: int, description: str = "Running", enabled: bool = True,
                 console: Optional["Console"] = None):
        self.total = total
        self.current = 0
        self.enabled = enabled
        self._progress: Optional[Progress] = None
        self._task_id = None

        if enabled and RICH_AVAILABLE:
            self._progress = Progress(
                SpinnerColumn(),
                TextColumn("[bold blue]{task.description}"),
                BarColumn(),
                MofNCompleteColumn(),
                TimeElapsedColumn(),
                TimeRemainingColumn(),
                console=console,
                transient=False,
            )
            self._task_id = self._progress.add_task(description, total=total)
            self._progress.start()

    def advance(self, label: str = ""):
        """Mark one job finished."""
        self.current += 1
        if self._progress is not None and self._task_id is not None:
            self._progress.update(self._task_id, advance=1)
        elif self.enabled:
            logger.info("Finished %s (%d/%d)", label or "job", self.current, self.total)

    def complete(self):
        if self._progress is not None:
            self._progress.stop()
            self._progress = None

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.complete()
