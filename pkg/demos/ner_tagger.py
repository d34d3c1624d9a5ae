"""
Tagging manufacturing entities
==============================

A BiLSTM-CRF tagger with a convolution and character features is trained on
template sentences, then applied to new text.
"""

from patentminer.metrics import entity_prf, token_prf
from patentminer.ner import TaggerConfig, decode_entities, predict, split_sentences, tag, train_tagger
from patentminer.ner.ablation import format_table, run_ablation
from patentminer.synthetic import NER_LEXICON, ner_corpus
from patentminer.vectorize import split_shuffle

classes = sorted(NER_LEXICON)
train, dev, test = split_shuffle(ner_corpus(1000, seed=0), [0.8, 0.1, 0.1], seed=0)
print(len(train), "train /", len(dev), "dev /", len(test), "test sentences")
print(list(zip(train[0].tokens, train[0].labels)))

config = TaggerConfig(hidden_size=64, use_conv=True, use_char=True, max_epochs=15, patience=5, seed=0)
result = train_tagger(train, dev, config, classes)
for h in result.history:
    print(f"epoch {h.epoch:2d}  loss {h.loss:8.3f}  dev F1 {h.dev_f1:.3f}")

# token-level scores merge B- and I-; entity-level scores need exact spans
pred = predict(result.model, [list(s.tokens) for s in test])
tok, _ = token_prf(pred, [list(s.labels) for s in test], classes)
ent = entity_prf([decode_entities(s.tokens, p) for s, p in zip(test, pred)],
                 [decode_entities(s.tokens, s.labels) for s in test], classes)
print(f"test token F1 {tok.f1:.3f}, entity F1 {ent.f1:.3f}")

# new text goes through the sentence splitter first
text = "The metformin was granulated in 50 mL of isopropanol at room temperature. Then it was dried overnight."
for sent in split_sentences(text):
    labels = tag(result.model, sent)
    print([(e.cls, e.text) for e in decode_entities(sent, labels)])

# a short version of the architecture comparison
small = TaggerConfig(word_dim=50, hidden_size=32, conv_filters=32, max_epochs=20, patience=10, seed=0)
rows = run_ablation(train[:300], dev, test, small, classes)
print(format_table(rows))
