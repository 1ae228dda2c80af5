import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from verity.gateway import Gateway
from verity.oracle import FactTable, RuleBasedOracle


@pytest.fixture
def tunisia_table() -> FactTable:
    return FactTable(
        entities=["Eisenhower", "Anderson", "Tunisia", "World War II",
                  "The Landing"],
        facts=[("Eisenhower", "commanded", "Anderson"),
               ("Anderson", "fought in", "Tunisia")],
        extraction_facts=[("Eisenhower", "superior of", "Anderson")],
        event_facts=[("the landing", "occurred in", "november 1942")],
        relations=["commanded", "fought in", "superior of"],
    )


@pytest.fixture
def oracle_gateway(tunisia_table) -> Gateway:
    return Gateway(RuleBasedOracle(tunisia_table))
