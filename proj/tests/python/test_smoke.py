import apedit


def test_tags_worked_example():
    mt = [10, 11, 12]
    pe = [10, 20, 12, 21]
    tags = apedit.qe_tags(mt, pe)
    assert tags.sentinel == 1
    assert tags.body == [1, -1, 2]
    h = apedit.hter(tags)
    assert h.edits == 2
    assert h.predicted_length == 4
    assert abs(h.value - 0.5) < 1e-12

    skeleton = apedit.plh_insert(mt, tags)
    assert len(skeleton) == len(pe)
    fill = [pe[i] for i, tok in enumerate(skeleton) if tok == 3]
    assert apedit.apply_edit_script(mt, tags, fill) == pe


def test_metrics():
    assert apedit.levenshtein([5, 6, 7], [5, 8, 7]) == 1
    assert apedit.corpus_ter([[5, 6, 7]], [[5, 6, 7]]) == 0.0
    assert apedit.corpus_bleu([[5, 6, 7, 8]], [[5, 6, 7, 8]]) == 100.0
    r = apedit.pearson([1.0, 2.0, 3.0], [1.0, 3.0, 2.0])
    assert abs(r - 0.5) < 1e-12


def test_synthetic_corpus_roundtrip():
    noise = apedit.NoiseSpec()
    noise.p_substitute = 0.1
    triplets = apedit.gen_synthetic_triplets(20, 30, 4, 8, noise, 7, 7)
    again = apedit.gen_synthetic_triplets(20, 30, 4, 8, noise, 7, 7)
    assert len(triplets) == 20
    for a, b in zip(triplets, again):
        assert a.src == b.src and a.mt == b.mt and a.pe == b.pe
    for t in triplets:
        # the source is the enciphered post-edit under the generation seed
        assert apedit.cipher_encode(t.pe, 30, 7) == t.src
        assert apedit.cipher_decode(t.src, 30, 7) == t.pe


def test_model_inference_runs():
    cfg = apedit.Config()
    for key, value in [
        ("model.d_model", "16"),
        ("model.layers", "1"),
        ("model.heads", "2"),
        ("model.ffn", "32"),
        ("data.vocab_size", "20"),
    ]:
        cfg.set(key, value)
    model = apedit.ApeModel(cfg)
    src, mt = [9, 7, 12, 5], [5, 6, 7]
    pred = model.qe_forward(src, mt)
    assert len(pred.tags.body) == len(mt)
    assert 0.0 <= pred.hter.value
    out = apedit.infer(model, src, mt, 0.0, 5)
    assert out.source_model == apedit.SourceModel.GM
    out = apedit.infer(model, src, mt, 1.0, 5)
    assert out.source_model == apedit.SourceModel.AOM
    assert 1 <= out.iterations_used <= 5
