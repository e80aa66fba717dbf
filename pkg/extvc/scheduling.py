"""Runs independent jobs (family searches, share row bands) through joblib with a tqdm progress
bar."""
from typing import Any, Callable, Dict, Optional, Sequence, Union
from dataclasses import asdict, dataclass

from joblib import Parallel, delayed
from tqdm.auto import tqdm


__all__ = ["TqdmParallel", "Scheduler"]


class TqdmParallel(Parallel):  # type: ignore
    """``joblib.Parallel`` counting completed jobs on a ``tqdm`` bar, labelled with ``unit``."""

    def __init__(self, *args: Any, progress_disable: bool = True, **kwargs: Any) -> None:
        self.progress_disable = progress_disable
        super().__init__(*args, **kwargs)

    def __call__(
        self,
        *args: Any,
        total: Optional[int] = None,
        desc: str = "",
        unit: str = "job",
        **kwargs: Any,
    ) -> Any:
        bar = tqdm(disable=self.progress_disable, total=total, desc=desc, unit=unit)
        with bar as self._pbar:
            return Parallel.__call__(self, *args, **kwargs)

    def print_progress(self) -> None:
        # joblib calls this after every completed batch
        self._pbar.total = self.n_dispatched_tasks
        self._pbar.update(self.n_completed_tasks - self._pbar.n)


class Scheduler:
    """``joblib`` configuration usable as a Hydra node. Results always come back in submission
    order, whatever the backend."""

    @dataclass
    class Config:
        """``joblib.Parallel`` parameters; sequential threads unless told otherwise."""

        n_jobs: Optional[int] = 1
        prefer: Optional[str] = "threads"
        verbose: int = 0
        timeout: Optional[float] = None
        backend: Optional[str] = None
        pre_dispatch: Any = "2 * n_jobs"
        batch_size: Any = "auto"
        max_nbytes: Optional[Any] = "1M"
        require: Optional[str] = None
        progress_disable: bool = True

    def __init__(self, config: Optional[Union[Config, Dict[str, Any]]] = None):
        defaults = asdict(self.Config())
        if isinstance(config, self.Config):
            defaults.update(asdict(config))
        elif config:
            defaults.update(config)
        self.config = defaults
        self.parallel = TqdmParallel(**self.config)

    @property
    def sequential(self) -> bool:
        return self.config["n_jobs"] in (None, 1)

    def run(self, fn: Callable, args: Sequence[tuple], desc: str = "", unit: str = "job") -> list:
        """Calls ``fn(*arg)`` for every ``arg``.

        Args:
            fn (Callable): Function to run, must be picklable for process backends.
            args (Sequence[tuple]): One argument tuple per call.
            desc (str): Progress bar label.
            unit (str): What one call processes, shown on the progress bar.

        Returns:
            list: Return values, in the order of ``args``.
        """
        if not args:
            return []
        if self.sequential and self.config["progress_disable"]:
            return [fn(*arg) for arg in args]
        results: list = self.parallel(
            (delayed(fn)(*arg) for arg in args), total=len(args), desc=desc, unit=unit
        )
        return results
