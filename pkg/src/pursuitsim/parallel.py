"""Process-pool fan-out for episode batches.

Results are keyed by job order (Pool.map preserves it), and every job is
fully determined by its own seeds, so aggregate results are independent of
worker scheduling.
"""

import multiprocessing


def parallel_map(fn, jobs, workers=1):
    jobs = list(jobs)
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    ctx = multiprocessing.get_context("fork")
    with ctx.Pool(min(workers, len(jobs))) as pool:
        return pool.map(fn, jobs)
