"""Fidelities, channel norms and capacity bounds for finite-dimensional quantum channels."""
from .channels import (
    Channel,
    CodingScheme,
    CPMap,
    Instrument,
    Superoperator,
    compose,
    depolarizing_channel,
    identity_channel,
    pinch_channel,
    random_channel,
    tensor,
    transposition_map,
)
from .errors import DimensionError, QCapacityError, ValidationError
from .fidelity import (
    average_fidelity_closed,
    average_fidelity_mc,
    channel_fidelity,
    entanglement_fidelity,
    inf_entanglement_fidelity,
    min_fidelity,
)
from .supnorms import cb_norm, superop_norm

__all__ = [
    "CPMap", "Channel", "CodingScheme", "DimensionError", "Instrument", "QCapacityError", "Superoperator",
    "ValidationError", "average_fidelity_closed", "average_fidelity_mc", "cb_norm", "channel_fidelity",
    "compose", "depolarizing_channel", "entanglement_fidelity", "identity_channel", "inf_entanglement_fidelity",
    "min_fidelity", "pinch_channel", "random_channel", "superop_norm", "tensor", "transposition_map",
]
