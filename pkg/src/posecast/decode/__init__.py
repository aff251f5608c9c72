"""Heatmap decoding: argmax, softmax, integral and two-step integral, with gradients."""

from .integral import (
    DECODERS,
    DecodeGradient,
    argmax_decode,
    normalize,
    integral_decode,
    marginalize,
    vector_integral,
    two_step_decode,
    decode,
    softmax_backward,
    marginal_backward,
    integral_backward,
    two_step_backward,
)

__all__ = [
    'DECODERS',
    'DecodeGradient',
    'argmax_decode',
    'normalize',
    'integral_decode',
    'marginalize',
    'vector_integral',
    'two_step_decode',
    'decode',
    'softmax_backward',
    'marginal_backward',
    'integral_backward',
    'two_step_backward',
]
