import numpy as np
import pytest

from lpspike.srm import SimParams, SynapseValue, Topology, membrane_potential

# genome trained with GaParams(rng_seed=4) on 3-5-1 Integer XOR, dt=1; MSE 0
XOR_351_INTEGER_GENOME = (
    "111010001001101100100010111100001100111100101000110100110000000010110010"
    "110101101001011101110001111000110001111000110101"
)

ACCEPTANCE_LINES: list[str] = []


def reference_simulate(topology: Topology, synapses, input_trains, params: SimParams):
    """Slow grid simulation built only on ``membrane_potential``.

    Evaluates neurons layer by layer, stepping through the grid and applying
    the discrete firing rule directly.  Shares no code with the compiled core.
    """
    sizes = topology.layer_sizes
    trains = [list(t) for t in input_trains]
    syn = list(synapses)
    out = []
    pos = 0
    offset = 0
    for layer in range(1, len(sizes)):
        pre = trains[offset : offset + sizes[layer - 1]]
        layer_trains = []
        for j in range(sizes[layer]):
            inputs = list(zip(syn[pos : pos + sizes[layer - 1]], pre))
            pos += sizes[layer - 1]
            spikes = []
            prev = None
            for k in range(params.n_steps + 1):
                t = k * params.dt
                u = membrane_potential(t, inputs, spikes[-1] if spikes else None, params)
                if k > 0 and u >= params.threshold and u > prev:
                    spikes.append(t)
                prev = u
            layer_trains.append(spikes)
        offset += sizes[layer - 1]
        trains.extend(layer_trains)
        out.extend(layer_trains)
    return out


def random_synapses(rng: np.random.Generator, topology: Topology, book) -> list[SynapseValue]:
    return [
        SynapseValue(float(rng.choice(book)), float(rng.integers(1, 9)))
        for _ in range(topology.synapse_count)
    ]


@pytest.fixture
def xor_genome_bits() -> str:
    return XOR_351_INTEGER_GENOME


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
