#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "stc/data.hpp"
#include "stc/error.hpp"
#include "stc/rng.hpp"

using namespace stc;

namespace {

double correlation(const Tensor& values, int a, int b) {
    const int T = static_cast<int>(values.dim(0));
    double ma = 0.0, mb = 0.0;
    for (int t = 0; t < T; ++t) {
        ma += values(t, a, 0);
        mb += values(t, b, 0);
    }
    ma /= T;
    mb /= T;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (int t = 0; t < T; ++t) {
        const double xa = values(t, a, 0) - ma;
        const double xb = values(t, b, 0) - mb;
        cov += xa * xb;
        va += xa * xa;
        vb += xb * xb;
    }
    return cov / std::sqrt(va * vb);
}

}  // namespace

TEST_CASE("signal CSV exact parse") {
    const std::string path = "test_sig_tmp.csv";
    {
        std::ofstream out(path);
        out << "0,1\n1.5,2.5\n-3,4\n0.25,9\n";
    }
    SignalDataset ds = load_signal_csv(path);
    CHECK(ds.num_steps() == 3);
    CHECK(ds.num_nodes() == 2);
    CHECK(ds.values(0, 0, 0) == 1.5);
    CHECK(ds.values(1, 1, 0) == 4.0);
    CHECK(ds.values(2, 0, 0) == 0.25);
    std::remove(path.c_str());
}

TEST_CASE("signal CSV names the location of a blank cell") {
    const std::string path = "test_sig_blank_tmp.csv";
    {
        std::ofstream out(path);
        out << "0,1\n1,2\n3,\n";
    }
    CHECK_THROWS_WITH_AS(load_signal_csv(path), doctest::Contains("row 3, column 2"), Error);
    std::remove(path.c_str());
}

TEST_CASE("signal CSV round trip is exact") {
    Rng rng(101);
    SignalDataset ds;
    ds.values = Tensor({40, 5, 1});
    for (double& v : ds.values.values()) v = rng.uniform(-100.0, 100.0);
    const std::string path = "test_sig_rt_tmp.csv";
    save_signal_csv(ds, path);
    SignalDataset back = load_signal_csv(path);
    for (std::size_t i = 0; i < ds.values.size(); ++i) {
        CHECK(std::abs(back.values(i) - ds.values(i)) <= 1e-12 * std::abs(ds.values(i)));
    }
    std::remove(path.c_str());
}

TEST_CASE("chronological split ratios") {
    SignalDataset ds;
    ds.values = Tensor({100, 2, 1});
    Rng rng(7);
    for (double& v : ds.values.values()) v = rng.uniform(0.0, 1.0);
    Splits sp = chronological_split(ds);
    CHECK(sp.train.num_steps() == 70);
    CHECK(sp.val.num_steps() == 10);
    CHECK(sp.test.num_steps() == 20);

    // 101 steps: floor train/val, remainder to test.
    SignalDataset ds2;
    ds2.values = Tensor({101, 2, 1});
    for (double& v : ds2.values.values()) v = rng.uniform(0.0, 1.0);
    Splits sp2 = chronological_split(ds2);
    CHECK(sp2.train.num_steps() == 70);
    CHECK(sp2.val.num_steps() == 10);
    CHECK(sp2.test.num_steps() == 21);

    // Contiguity and order.
    CHECK(sp2.train.values(69, 1, 0) == ds2.values(69, 1, 0));
    CHECK(sp2.val.values(0, 0, 0) == ds2.values(70, 0, 0));
    CHECK(sp2.test.values(0, 0, 0) == ds2.values(80, 0, 0));
}

TEST_CASE("normalization statistics come from the training split only") {
    // Shifted validation span: if stats were fit on everything the val mean
    // would be zero; fit on train alone it stays displaced.
    SignalDataset ds;
    ds.values = Tensor({100, 1, 1});
    for (int t = 0; t < 100; ++t) ds.values(t, 0, 0) = t < 70 ? std::sin(0.7 * t) : 5.0 + 0.01 * t;
    Splits sp = chronological_split(ds);
    const Tensor val_norm = sp.norm.normalize(sp.val.values);
    double mean = 0.0;
    for (std::size_t i = 0; i < val_norm.size(); ++i) mean += val_norm(i);
    mean /= val_norm.size();
    CHECK(std::abs(mean) > 1.0);

    // Round trip identity.
    const Tensor back = sp.norm.denormalize(val_norm);
    for (std::size_t i = 0; i < back.size(); ++i)
        CHECK(back(i) == doctest::Approx(sp.val.values(i)).epsilon(1e-9));
}

TEST_CASE("constant features are rejected") {
    SignalDataset ds;
    ds.values = Tensor({50, 2, 1});
    ds.values.fill(3.0);
    CHECK_THROWS_WITH_AS(chronological_split(ds), doctest::Contains("constant"), Error);
}

TEST_CASE("window counts and slices") {
    CHECK(make_windows(15, 12, 3).size() == 1);
    CHECK(make_windows(19, 12, 3).size() == 5);
    CHECK_THROWS_WITH_AS(make_windows(10, 8, 3), doctest::Contains("need at least 11"), Error);

    Rng rng(11);
    Tensor values({30, 3, 1});
    for (double& v : values.values()) v = rng.uniform(-1.0, 1.0);
    Tensor x, y;
    window_at(values, 7, 5, 2, x, y);
    for (int t = 0; t < 5; ++t)
        for (int v = 0; v < 3; ++v) CHECK(x(t, v, 0) == values(7 + t, v, 0));
    for (int s = 0; s < 2; ++s)
        for (int v = 0; v < 3; ++v) CHECK(y(s, v) == values(12 + s, v, 0));
}

TEST_CASE("windows never cross a split boundary") {
    SignalDataset ds;
    ds.values = Tensor({100, 1, 1});
    for (int t = 0; t < 100; ++t) ds.values(t, 0, 0) = t;
    Splits sp = chronological_split(ds);
    auto offsets = make_windows(sp.train.num_steps(), 12, 3);
    // The last train window ends exactly at the split boundary.
    CHECK(offsets.back() + 12 + 3 == 70);
}

TEST_CASE("synthetic generator: all-easy datasets are strongly correlated") {
    SynthConfig cfg;
    cfg.num_nodes = 10;
    cfg.num_easy = 10;
    cfg.num_hard_temporal = 0;
    cfg.num_hard_spatial = 0;
    cfg.num_steps = 800;
    SynthResult synth = synth_generate(cfg);
    for (int a = 0; a < 10; ++a)
        for (int b = a + 1; b < 10; ++b) CHECK(correlation(synth.dataset.clean, a, b) > 0.9);
}

TEST_CASE("synthetic generator: hard-spatial nodes anti-correlate with neighbors") {
    SynthConfig cfg;
    SynthResult synth = synth_generate(cfg);
    REQUIRE(synth.dataset.num_nodes() == 40);
    int checked = 0;
    for (int v = 0; v < 40; ++v) {
        if (synth.dataset.node_meta[v] != NodeLabel::HardSpatial) continue;
        for (int u = 0; u < 40; ++u) {
            if (u == v || !synth.graph.has_edge(v, u)) continue;
            CHECK(synth.dataset.node_meta[u] == NodeLabel::Easy);
            CHECK(correlation(synth.dataset.clean, v, u) < 0.0);
            ++checked;
        }
    }
    CHECK(checked > 0);
}

TEST_CASE("synthetic generator determinism and class counts") {
    SynthConfig cfg;
    cfg.seed = 33;
    SynthResult a = synth_generate(cfg);
    SynthResult b = synth_generate(cfg);
    CHECK(a.dataset.values.values() == b.dataset.values.values());
    CHECK(a.graph.edges.size() == b.graph.edges.size());

    int easy = 0, ht = 0, hs = 0;
    for (NodeLabel l : a.dataset.node_meta) {
        if (l == NodeLabel::Easy) ++easy;
        else if (l == NodeLabel::HardTemporal) ++ht;
        else ++hs;
    }
    CHECK(easy == 28);
    CHECK(ht == 6);
    CHECK(hs == 6);

    // Every node has at least one neighbor (isolated nodes get attached).
    for (int v = 0; v < 40; ++v) {
        bool any = false;
        for (int u = 0; u < 40 && !any; ++u) any = u != v && a.graph.has_edge(v, u);
        CHECK(any);
    }
}

TEST_CASE("noise injection") {
    SynthConfig cfg;
    cfg.num_nodes = 8;
    cfg.num_easy = 8;
    cfg.num_hard_temporal = 0;
    cfg.num_hard_spatial = 0;
    cfg.num_steps = 400;
    SignalDataset ds = synth_generate(cfg).dataset;
    ds.values(5, 3, 0) = 0.0;  // a planted zero must stay zero

    SignalDataset same = inject_noise(ds, 0.0, 9);
    CHECK(same.values.values() == ds.values.values());

    const double delta = 0.5;
    SignalDataset noisy = inject_noise(ds, delta, 9);
    double sum_ratio = 0.0;
    long n = 0;
    for (std::size_t i = 0; i < ds.values.size(); ++i) {
        if (ds.values(i) == 0.0) {
            CHECK(noisy.values(i) == 0.0);
            continue;
        }
        const double ratio = noisy.values(i) / ds.values(i);
        CHECK(ratio >= 1.0 - delta);
        CHECK(ratio <= 1.0 + delta);
        sum_ratio += ratio - 1.0;
        ++n;
    }
    // Mean of delta within 3 standard errors of zero.
    const double se = delta / std::sqrt(3.0) / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(sum_ratio / n) < 3.0 * se);

    CHECK_THROWS_AS(inject_noise(ds, -0.1, 1), Error);
}
