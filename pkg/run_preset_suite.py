import logging
import sys

from dotenv import load_dotenv

from runner.config import environment_overrides, log_level
from runner.presets import list_presets, preset
from runner.scenario import EXIT_ERROR, EXIT_FAIL, EXIT_PASS, run_scenario

load_dotenv()
logging.basicConfig(level=log_level(), format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

if __name__ == "__main__":
    codes = {}
    for name in list_presets():
        try:
            cfg = preset(name, **environment_overrides())
            codes[name] = run_scenario(cfg).exit_code
        except Exception as e:
            logger.error(f"Error in preset {name}: {e}")
            codes[name] = EXIT_ERROR

    logger.info("\n" + "=" * 60)
    logger.info(f"{'Preset':<30} | {'Exit':<6}")
    logger.info("-" * 60)
    for name, code in codes.items():
        logger.info(f"{name:<30} | {code:<6}")
    logger.info("=" * 60 + "\n")

    if EXIT_ERROR in codes.values():
        sys.exit(EXIT_ERROR)
    sys.exit(EXIT_FAIL if EXIT_FAIL in codes.values() else EXIT_PASS)
