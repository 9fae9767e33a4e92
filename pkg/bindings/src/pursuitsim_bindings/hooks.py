"""Curriculum hooks: each iteration's task batch goes out, success rates come
back, archive semantics stay identical to the native loop (both drive the
same engine with the same seed)."""

from pursuitsim.config import AppConfig
from pursuitsim.curriculum import CurriculumEngine

from .api import _resolve_config


class ResultSink:
    """One-shot submission of an iteration's success rates."""

    def __init__(self, engine, batch):
        self._engine = engine
        self._batch = batch
        self.submitted = False
        self.stats = None

    def submit(self, success_rates, reeval_rates=()):
        if self.submitted:
            raise RuntimeError("results for this iteration were already "
                               "submitted")
        self.stats = self._engine.submit(list(success_rates),
                                         list(reeval_rates))
        self.submitted = True
        return self.stats


class CurriculumHooks:
    """Iterator of (task batch, result sink) pairs for external trainers.

    Each yielded batch carries ``tasks`` (and ``reeval_tasks`` for stale
    archive entries due for re-evaluation); the paired sink must receive the
    corresponding success rates before the next iteration is produced,
    otherwise iteration stops with a diagnostic. Closing releases the native
    engine state.
    """

    def __init__(self, config=None, iterations=None, seed=0):
        app = _resolve_config(config)
        if not isinstance(app, AppConfig):
            raise TypeError("config did not resolve to an AppConfig")
        self._engine = CurriculumEngine(app.curriculum, app.env, seed=seed)
        self._iterations = iterations
        self._closed = False

    def __iter__(self):
        produced = 0
        while not self._closed and (self._iterations is None
                                    or produced < self._iterations):
            batch = self._engine.propose()
            sink = ResultSink(self._engine, batch)
            yield batch, sink
            if self._closed:
                break
            if not sink.submitted:
                raise RuntimeError(
                    f"iteration {self._engine.iteration} blocked: success "
                    "rates were not submitted through the result sink")
            produced += 1

    @property
    def iteration(self):
        return self._final_iteration if self._engine is None \
            else self._engine.iteration

    @property
    def archive(self):
        return self._final_archive if self._engine is None \
            else list(self._engine.archive)

    @property
    def stats(self):
        return self._final_stats if self._engine is None \
            else list(self._engine.stats)

    def close(self):
        if self._engine is not None:
            self._final_archive = list(self._engine.archive)
            self._final_stats = list(self._engine.stats)
            self._final_iteration = self._engine.iteration
        self._closed = True
        self._engine = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def curriculum_hooks(config=None, iterations=None, seed=0):
    """Convenience constructor mirroring the functional API."""
    return CurriculumHooks(config=config, iterations=iterations, seed=seed)
