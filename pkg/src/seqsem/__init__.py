"""seqsem: sequence ensembles of a fixed RNA secondary structure.

For a pseudoknot-free structure S this package computes the partition
function over all sequences Q(S), Boltzmann-samples sequences exactly in
linear time, evaluates pattern probabilities, builds entropy heat-maps, and
scores structures by how well their sampled sequences refold (IFR and the
refolding-gap signature), backed by an mfe folder and the partition function
over structures Q(sigma) under the same energy model.
"""

from .analysis import (
    EnergySpectrum,
    HeatMap,
    MIScore,
    PatternReport,
    SignatureReport,
    energy_spectrum,
    entropy,
    exact_heat_map,
    largest_hot_interval,
    mi_score,
    sampled_heat_map,
    signature_report,
    top_patterns,
)
from .energy import (
    INADMISSIBLE,
    PAIR_TYPES,
    EnergyParams,
    load_params,
    loop_energy,
    pair_type,
    parse_params,
    structure_energy,
)
from .errors import InputError, ParamsError, SequenceError, StructureError
from .fold import FoldResult, backend_name, mccaskill_partition, mfe_fold, refolds_to
from .partition import (
    PatternConstraint,
    SequencePartition,
    partition_function,
    pattern_partition,
    pattern_probability,
)
from .sampler import SampledSequence, SequenceSampler, ensemble_rng, sample, sample_ensemble
from .structure import (
    BASES,
    Loop,
    LoopDecomposition,
    LoopKind,
    SecondaryStructure,
    count_structures,
    decode_sequence,
    decompose,
    encode_sequence,
    parse_dot_bracket,
    parse_pair_lines,
    sample_uniform_structure,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
