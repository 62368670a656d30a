from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor, as_completed
from threading import Lock

from tqdm import tqdm

from config import settings


class BaseSeedRunner(ABC):
    """
    시드별 독립 작업을 스레드 풀에서 실행하고 시드 순서로 결과를 합친다.
    실패한 시드는 errored_seeds에 기록하고 결과에서 뺀다.
    """

    desc = "🎲 Seeds"

    def __init__(self, logger, thread_workers=None, progress=True):
        self.logger = logger
        self.THREAD_WORKERS = thread_workers or settings.THREADS
        self.progress = progress
        self.errored_seeds = []
        self._lock = Lock()

    @abstractmethod
    def run_single(self, seed):
        pass

    def run_batch(self, seeds):
        seeds = list(seeds)
        self.logger.info(f"🔄 {len(seeds)}개 시드 실행 (workers={self.THREAD_WORKERS})")
        results = {}

        with ThreadPoolExecutor(max_workers=self.THREAD_WORKERS) as executor:
            futures = {executor.submit(self._safe_run, seed): seed for seed in seeds}
            for future in tqdm(as_completed(futures), total=len(futures), desc=self.desc, disable=not self.progress):
                result = future.result()
                if result is not None:
                    results[futures[future]] = result

        if self.errored_seeds:
            self.logger.warning(f"⚠️ 실패한 시드 {len(self.errored_seeds)}개: {sorted(self.errored_seeds)}")
        return [results[seed] for seed in seeds if seed in results]

    def _safe_run(self, seed):
        try:
            return self.run_single(seed)
        except Exception as e:
            self.logger.error(f"[seed {seed}] 에러 발생: {e}")
            with self._lock:
                self.errored_seeds.append(seed)
            return None
