import os
from dotenv import load_dotenv

load_dotenv()

# ------------------------- 실행 설정 -------------------------
THREADS = int(os.getenv("LANDSCAPE_THREADS", os.cpu_count() or 1))

# ------------------------- 경로 설정 -------------------------
LOG_DIR = os.getenv("LANDSCAPE_LOG_DIR", "log")
LOG_LEVEL = os.getenv("LANDSCAPE_LOG_LEVEL", "INFO")
PROBLEM_DIR = os.getenv("LANDSCAPE_PROBLEM_DIR", "data/problems")
OUTPUT_DIR = os.getenv("LANDSCAPE_OUTPUT_DIR", "data/output")
