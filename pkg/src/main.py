import logging
from pathlib import Path
from typing import Union

from dotenv import load_dotenv

from src.config import LOG_FILE

logger = logging.getLogger(__name__)


def setup_environment(out_dir: Union[str, Path], debug: bool = False) -> Path:
    """Set up the output directory and root logging for a CLI run."""
    try:
        # Load environment variables
        load_dotenv()

        # Create the output directory before the log file handler opens it
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

        # Initialize logging
        logging.basicConfig(
            level=logging.DEBUG if debug else logging.INFO,
            format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
            handlers=[
                logging.FileHandler(out_dir / LOG_FILE),
                logging.StreamHandler()
            ],
            force=True
        )
        if debug:
            logger.debug("Debug logging enabled")

        logger.info(f"Environment setup completed, writing to {out_dir}")
        return out_dir
    except Exception as e:
        logger.error(f"Error setting up environment: {str(e)}")
        raise


def initialize_components():
    """Register every experiment and return the registry."""
    try:
        # importing the package registers the experiments
        import src.experiments  # noqa: F401
        from src.experiments.experiment_registry import get_registry

        registry = get_registry()
        logger.info(f"Components initialized: {len(registry.get_all_experiments())} experiments")
        return registry
    except Exception as e:
        logger.error(f"Error initializing components: {str(e)}")
        raise
