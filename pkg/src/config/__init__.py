from pathlib import Path

CONFIG_DIR = Path(__file__).parent
CONFIG_FILE = CONFIG_DIR / "config.yaml"
CORPUS_DIR = CONFIG_DIR / "corpus"
