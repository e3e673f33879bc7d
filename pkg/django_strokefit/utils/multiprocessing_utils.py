# coding=utf-8
import atexit
import os
import time
import traceback
from multiprocessing import Manager, Process, cpu_count
from multiprocessing.pool import ThreadPool

from django_strokefit import THREADS_ENVIRONMENT_VARIABLE, get_logger, get_setting
from django_strokefit.exceptions import InvalidConfigError
from django_strokefit.utils.strokefit_log import start_multiprocessing_logging

logger = get_logger()

"""
Parallelism helpers.

Rendering is split into fixed-height row bands that are mapped over a
thread pool; verification properties are spread over processes with
StrokefitMultiProcess, adapted from Jeremy Robin's "Django Multiprocessing":
https://engineering.talentpair.com/django-multiprocessing-153dbcf51dab
"""

USE_ALL_WORKERS = 999

# band height never depends on the worker count, so band-ordered reductions
# are bit-identical for any number of threads
ROW_BAND_HEIGHT = 16


class Timer(object):
    """
    Simple class for timing code blocks
    """

    def __init__(self):
        self.start_time = time.time()

    def done(self):
        end_time = time.time()
        return end_time - self.start_time


def auto_num_workers():
    # always use at least one thread, leave one cpu for the main process
    return max(1, cpu_count() - 1)


def get_threads_cap():
    """
    The STROKEFIT_THREADS cap: the environment variable wins over the Django setting.
    0 means no cap (auto).
    """
    raw = os.environ.get(THREADS_ENVIRONMENT_VARIABLE)
    if raw is None or raw.strip() == "":
        raw = get_setting('STROKEFIT_THREADS', 0)
    try:
        cap = int(raw)
    except (TypeError, ValueError):
        raise InvalidConfigError("{} must be an integer, got {!r}".format(THREADS_ENVIRONMENT_VARIABLE, raw))
    if cap < 0:
        raise InvalidConfigError("{} must be >= 0, got {}".format(THREADS_ENVIRONMENT_VARIABLE, cap))
    return cap


def resolve_num_workers(requested=None):
    """
    Turn a requested worker count into an actual one.
    None or 0 means auto; USE_ALL_WORKERS means every logical cpu;
    the STROKEFIT_THREADS cap is applied last.
    """
    if requested is None or requested == 0:
        workers = auto_num_workers()
    elif requested == USE_ALL_WORKERS:
        workers = cpu_count()
    else:
        workers = int(requested)
        if workers < 0:
            raise InvalidConfigError("worker count must be >= 0, got {}".format(requested))

    cap = get_threads_cap()
    if cap:
        workers = min(workers, cap)
    return max(1, workers)


def row_bands(height, band_height=ROW_BAND_HEIGHT):
    """
    Split ``range(height)`` into ``(start, stop)`` bands of a fixed height.
    """
    return [(start, min(start + band_height, height)) for start in range(0, height, band_height)]


_thread_pools = {}


def _get_thread_pool(workers):
    # pools inherited through fork have no threads in the child
    key = (os.getpid(), workers)
    pool = _thread_pools.get(key)
    if pool is None:
        pool = ThreadPool(workers)
        _thread_pools[key] = pool
    return pool


def map_row_bands(func, bands, workers=None):
    """
    Apply ``func(band)`` to every band and return the results in band order.
    numpy releases the GIL in its inner loops, so threads are enough here.
    """
    workers = min(resolve_num_workers(workers), len(bands) or 1)
    if workers == 1:
        return [func(band) for band in bands]
    return _get_thread_pool(workers).map(func, bands)


@atexit.register
def close_thread_pools():
    """
    Close and join the row band pools of this process. Pools inherited
    through fork are only forgotten; their threads never existed here.
    """
    pid = os.getpid()
    for key in list(_thread_pools):
        pool = _thread_pools.pop(key)
        if key[0] == pid:
            pool.close()
            pool.join()


def _process_worker(func, result_queue, jobs, catch_exceptions=True):
    """
    Process target for StrokefitMultiProcess. Module level so that it can be
    pickled by the spawn start method.
    """
    for job_index, job in jobs:
        try:
            rv = func(job)
        except Exception:
            rv = None

            if catch_exceptions:
                logger.error("worker caught an error, continuing - %s" % traceback.format_exc())
            else:
                raise

        result_queue.put((job_index, rv), block=False)


class StrokefitMultiProcess(object):
    """
    Abstraction for running independent jobs in several processes.
    Use as a context manager; results come back in job order.
    """

    def __init__(self, num_workers=None, log_debug_info=False, status_interval=20):
        vcpus = cpu_count()
        self.num_workers = resolve_num_workers(num_workers)
        self.log_debug_info = log_debug_info
        self.status_interval = status_interval
        self.workers = []
        self.job_count = 1
        self.num_jobs = 0

        logger.info("Using {} multiprocessing workers out of {} logical CPUs".format(self.num_workers, vcpus))

        # synchronous result queue will be instantiated in self.map()
        self.queue = None
        self._manager = None

    def __enter__(self):
        start_multiprocessing_logging()
        return self

    def map(self, func, iterable):
        jobs = list(iterable)
        # this synchronous queue is passed to child processes, so they can append results
        self._manager = Manager()
        self.queue = self._manager.Queue()
        self.num_jobs = len(jobs)
        self.job_count = len(jobs) or 1
        self.workers = []

        for worker_idx in range(min(self.num_workers, len(jobs))):
            worker_jobs = [(idx, job) for idx, job in enumerate(jobs) if idx % self.num_workers == worker_idx]

            if self.log_debug_info:
                logger.debug("Working on {} of {} jobs in worker {}".format(len(worker_jobs), len(jobs), worker_idx))

            p = Process(target=_process_worker, args=(func, self.queue, worker_jobs))
            p.start()
            self.workers.append(p)

        self._wait()

    def _wait(self):
        """
        Wait for all workers to finish
        Wake up periodically to print out how much work is done
        """
        total_time = Timer()

        while [p for p in self.workers if p.is_alive()]:
            for p in self.workers:
                p.join(timeout=self.status_interval)

            if self.log_debug_info:
                percent = (self.queue.qsize() * 100) // self.job_count
                logger.info("--------- {}% done ({}s elapsed) ---------".format(percent, int(total_time.done())))

    def results(self):
        """
        Get the results of calling the functions, in job order.
        Jobs that raised come back as None.
        """
        collected = {}
        while self.queue is not None and not self.queue.empty():
            job_index, rv = self.queue.get()
            collected[job_index] = rv
        return [collected.get(idx) for idx in range(self.num_jobs)]

    def __exit__(self, exc_type, exc_value, tb):
        for p in self.workers:
            if p.is_alive():
                p.terminate()
        if self._manager is not None:
            self._manager.shutdown()
