"""
文本编码模块
"""

from .tokenization import basic_tokenize, build_pair_tokens
from .text_encoder import EncodedText, TextEncoder, HashEncoder, cosine_similarity
from .backbone import SequenceBatch, TrainableEncoder, set_seed
from .tiny_encoder import BpeVocabulary, TinyEncoder
from .pretrained import PretrainedEncoder
from .checkpoint import save_checkpoint, load_checkpoint, encoder_from_checkpoint

__all__ = [
    'basic_tokenize',
    'build_pair_tokens',
    'EncodedText',
    'TextEncoder',
    'HashEncoder',
    'cosine_similarity',
    'SequenceBatch',
    'TrainableEncoder',
    'set_seed',
    'BpeVocabulary',
    'TinyEncoder',
    'PretrainedEncoder',
    'save_checkpoint',
    'load_checkpoint',
    'encoder_from_checkpoint'
]
