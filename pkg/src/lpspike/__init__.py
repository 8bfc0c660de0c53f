"""Limited-precision spiking neural networks trained by a binary genetic algorithm."""

from .codec import (
    Chromosome,
    Genome,
    SynapseGene,
    WeightScheme,
    decode_chromosome,
    decode_gene,
    delay_codebook,
    encode_gene,
    weight_codebook,
)
from .encoders import (
    ClassTargets,
    GrfParams,
    XorCoding,
    decode_output_class,
    encode_iris_sample,
    encode_xor,
    grf_centers_widths,
    grf_spike_times,
)
from .estimator import GRFEncoder, SpikeTimeClassifier, SpikeTimeRegressor
from .ga import (
    FitnessTask,
    GaParams,
    Pattern,
    TrainReport,
    baker_probabilities,
    evaluate_mse,
    exhaustive_search,
    mutate,
    select_parent,
    step_generation,
    train,
    uniform_crossover,
)
from .srm import (
    SimParams,
    SpikeTrain,
    SynapseValue,
    Topology,
    membrane_potential,
    psp_kernel,
    refractory_kernel,
    simulate_network,
)

__version__ = "0.1.0"
