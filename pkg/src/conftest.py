import pytest
from loguru import logger


@pytest.fixture
def warnings_sink():
    """Capture les messages loguru de niveau WARNING"""
    messages = []
    handler_id = logger.add(lambda m: messages.append(m.record["message"]), level="WARNING")
    yield messages
    logger.remove(handler_id)
