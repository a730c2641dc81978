import logging
import os
from pathlib import Path
from typing import Optional, Union
from requests import get
from .constants import DEFAULT_SEED, GET_TIMEOUT, SEED_ENV_VAR

logger = logging.getLogger(__name__)


def _is_url(source: Union[str, Path]) -> bool:
    return str(source).startswith(("http://", "https://"))


def _read_text(source: Union[str, Path]) -> str:
    """Read a UTF-8 text resource from a local path or an http(s) URL.

    Args:
        source (str): File path or URL.
    """
    if _is_url(source):
        logger.debug("fetching %s", source)
        response = get(str(source), timeout=GET_TIMEOUT)
        response.raise_for_status()
        response.encoding = "utf-8"
        return response.text

    with open(source, encoding="utf-8") as file:
        return file.read()


def _read_bytes(source: Union[str, Path]) -> bytes:
    if _is_url(source):
        logger.debug("fetching %s", source)
        response = get(str(source), timeout=GET_TIMEOUT)
        response.raise_for_status()
        return response.content

    with open(source, "rb") as file:
        return file.read()


def _default_seed(seed: Optional[int] = None) -> int:
    """Resolve a seed: explicit value, then the environment, then the default."""
    if seed is not None:
        return int(seed)
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed:
        return int(env_seed)
    return DEFAULT_SEED
