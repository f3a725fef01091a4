from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

TINY_VOCAB = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "climate", "risk", "board", "emissions",
              "targets", "strategy", "governance", "management", "carbon", "this", "example",
              "is", "about", "oversight", "the", "of", "and", "scenario", "financial"]


def make_word_tokenizer():
    from tokenizers import Tokenizer
    from tokenizers.models import WordLevel
    from tokenizers.pre_tokenizers import Whitespace
    from tokenizers.processors import TemplateProcessing

    vocab = {word: i for i, word in enumerate(TINY_VOCAB)}
    tok = Tokenizer(WordLevel(vocab, unk_token="[UNK]"))
    tok.pre_tokenizer = Whitespace()
    tok.post_processor = TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])],
    )
    return tok


def make_plain_pair_model(n_logits=3, seed=11):
    import torch
    import torch.nn as nn

    class PairClassifier(nn.Module):
        def __init__(self):
            super().__init__()
            self.embedding = nn.Embedding(len(TINY_VOCAB), 16)
            self.head = nn.Linear(16, n_logits)

        def forward(self, input_ids, attention_mask):
            emb = self.embedding(input_ids)
            mask = attention_mask.unsqueeze(-1).to(emb.dtype)
            pooled = (emb * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1.0)
            return self.head(pooled)

    torch.manual_seed(seed)
    return PairClassifier().eval()


@pytest.fixture(scope="session")
def tiny_hf_model_dir(tmp_path_factory):
    """Small randomly initialized transformers pair classifier saved to disk."""
    import torch
    from transformers import BertConfig, BertForSequenceClassification, PreTrainedTokenizerFast

    torch.manual_seed(7)
    config = BertConfig(
        vocab_size=len(TINY_VOCAB),
        hidden_size=32,
        num_hidden_layers=1,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=64,
        num_labels=3,
        id2label={0: "contradiction", 1: "neutral", 2: "entailment"},
        label2id={"contradiction": 0, "neutral": 1, "entailment": 2},
        pad_token_id=0,
    )
    model = BertForSequenceClassification(config).eval()
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=make_word_tokenizer(),
        pad_token="[PAD]", unk_token="[UNK]", cls_token="[CLS]", sep_token="[SEP]",
        model_max_length=64,
    )
    target = tmp_path_factory.mktemp("tiny-hf-model")
    model.save_pretrained(target)
    tokenizer.save_pretrained(target)
    return target
