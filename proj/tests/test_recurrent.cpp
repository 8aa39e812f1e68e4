#include "oracles.hpp"
#include "support.hpp"

using namespace emhnet;
using testing_support::make_series;

namespace {

PaddedPanel single_panel(std::vector<double> values) {
    const std::vector<PriceSeries> list{make_series("A", std::move(values))};
    return build_padded_panel(list);
}

RecurrentParams scalar_params(CellKind kind) {
    return RecurrentParams::zeros({kind, 1, 1});
}

}  // namespace

TEST(RecurrentForward, ZeroParametersPredictZero) {
    Rng rng(1);
    const auto panel = oracle::random_panel(rng, 3, 6);
    for (auto kind : {CellKind::basic, CellKind::lstm, CellKind::gru}) {
        const auto p = RecurrentParams::zeros({kind, 2, 3});
        for (double v : recurrent_forward(p, panel)) EXPECT_EQ(v, 0.0);
    }
}

TEST(RecurrentForward, ReadoutBiasOnlyPredictsBias) {
    Rng rng(2);
    const auto panel = oracle::random_panel(rng, 2, 5);
    auto p = RecurrentParams::zeros({CellKind::basic, 1, 4});
    p.readout_bias() = 0.75;
    for (double v : rnn_forward(p, panel)) EXPECT_EQ(v, 0.75);
}

TEST(RecurrentForward, HandUnrolledBasicRecurrence) {
    // W_i = 1, W_r = 0.5, W_y = 1, biases 0; series x0, x1, x2.
    auto p = scalar_params(CellKind::basic);
    p.input_weights(0)[0] = 1.0;
    p.recurrent_weights(0)[0] = 0.5;
    p.readout_weights()[0] = 1.0;
    const auto pred = rnn_forward(p, single_panel({0.3, -0.8, 1.2}));
    const double h1 = std::tanh(0.3);
    const double h2 = std::tanh(-0.8 + 0.5 * h1);
    ASSERT_EQ(pred.size(), 2u);
    EXPECT_NEAR(pred[0], h1, 1e-15);
    EXPECT_NEAR(pred[1], h2, 1e-15);
}

TEST(RecurrentForward, LstmZeroParametersGiveHalfGatesAndZeroState) {
    const auto p = scalar_params(CellKind::lstm);
    const std::vector<double> x{3.7};
    const auto s = cell_step(p, 0, x, {{0.0}, {0.0}});
    EXPECT_EQ(s.hidden[0], 0.0);
    EXPECT_EQ(s.cell[0], 0.0);
    // With gates at 0.5 and candidate 0, a non-zero cell decays by half.
    const auto s2 = cell_step(p, 0, x, {{0.0}, {0.8}});
    EXPECT_NEAR(s2.cell[0], 0.4, 1e-15);
    EXPECT_NEAR(s2.hidden[0], 0.5 * std::tanh(0.4), 1e-15);
}

TEST(RecurrentForward, ZeroInputsKeepLstmStateAtZero) {
    const auto p = RecurrentParams::zeros({CellKind::lstm, 1, 3});
    CellState s{{0, 0, 0}, {0, 0, 0}};
    const std::vector<double> x{0.0};
    for (int t = 0; t < 5; ++t) {
        s = cell_step(p, 0, x, s);
        for (double h : s.hidden) EXPECT_EQ(h, 0.0);
    }
}

TEST(RecurrentForward, GruZeroParametersHalveState) {
    const auto p = scalar_params(CellKind::gru);
    const std::vector<double> x{1.0};
    EXPECT_EQ(cell_step(p, 0, x, {{0.0}, {}}).hidden[0], 0.0);
    EXPECT_NEAR(cell_step(p, 0, x, {{0.6}, {}}).hidden[0], 0.3, 1e-15);
}

TEST(RecurrentForward, ScalarCellsMatchStraightLineTranscriptions) {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> xs(2 + rng.below(6));
        for (auto& x : xs) x = rng.normal();
        const auto panel = single_panel(xs);

        auto pb = scalar_params(CellKind::basic);
        for (auto& v : pb.values) v = rng.uniform(-1, 1);
        auto pl = scalar_params(CellKind::lstm);
        for (auto& v : pl.values) v = rng.uniform(-1, 1);
        auto pg = scalar_params(CellKind::gru);
        for (auto& v : pg.values) v = rng.uniform(-1, 1);

        oracle::ScalarLstm L{};
        for (int g = 0; g < 4; ++g) {
            L.wi[g] = pl.input_weights(0)[g];
            L.wr[g] = pl.recurrent_weights(0)[g];
            L.b[g] = pl.hidden_bias(0)[g];
        }
        oracle::ScalarGru G{};
        for (int g = 0; g < 3; ++g) {
            G.wi[g] = pg.input_weights(0)[g];
            G.wr[g] = pg.recurrent_weights(0)[g];
            G.b[g] = pg.hidden_bias(0)[g];
        }
        const auto yb = rnn_forward(pb, panel);
        const auto yl = lstm_forward(pl, panel);
        const auto yg = gru_forward(pg, panel);
        double hb = 0, hl = 0, cl = 0, hg = 0;
        for (std::size_t t = 0; t + 1 < xs.size(); ++t) {
            hb = oracle::basic_step(pb.input_weights(0)[0], pb.recurrent_weights(0)[0], pb.hidden_bias(0)[0], xs[t], hb);
            oracle::lstm_step(L, xs[t], hl, cl);
            hg = oracle::gru_step(G, xs[t], hg);
            EXPECT_NEAR(yb[t], pb.readout_weights()[0] * hb + pb.readout_bias(), 1e-12);
            EXPECT_NEAR(yl[t], pl.readout_weights()[0] * hl + pl.readout_bias(), 1e-12);
            EXPECT_NEAR(yg[t], pg.readout_weights()[0] * hg + pg.readout_bias(), 1e-12);
        }
    }
}

TEST(RecurrentForward, StackedLayersFeedUpward) {
    auto p = RecurrentParams::zeros({CellKind::basic, 2, 1});
    p.input_weights(0)[0] = 0.9;
    p.input_weights(1)[0] = 1.3;
    p.recurrent_weights(1)[0] = -0.4;
    p.readout_weights()[0] = 2.0;
    const auto pred = rnn_forward(p, single_panel({0.5, -0.25, 1.0}));
    double top = 0.0;
    for (double x : {0.5, -0.25}) {
        const double bottom = std::tanh(0.9 * x);
        top = std::tanh(1.3 * bottom - 0.4 * top);
    }
    EXPECT_NEAR(pred[1], 2.0 * top, 1e-15);
}

TEST(RecurrentForward, ZeroRecurrentWeightsMakeStepsLocal) {
    Rng rng(41);
    auto p = RecurrentParams::random({CellKind::basic, 1, 3}, 5);
    for (auto& w : p.recurrent_weights(0)) w = 0.0;
    std::vector<double> xs(6);
    for (auto& x : xs) x = rng.normal();
    const auto base = rnn_forward(p, single_panel(xs));
    auto perturbed = xs;
    for (std::size_t i = 0; i + 2 < xs.size(); ++i) perturbed[i] += 1.0;
    const auto moved = rnn_forward(p, single_panel(perturbed));
    // The last row consumes x_{T-2}, which was left untouched.
    EXPECT_EQ(base.back(), moved.back());
    EXPECT_NE(base.front(), moved.front());
}

TEST(RecurrentForward, KindChecksAndShapeErrors) {
    const auto panel = single_panel({1, 2, 3});
    EXPECT_THROW(lstm_forward(RecurrentParams::zeros({CellKind::gru, 1, 2}), panel), ShapeError);
    auto p = RecurrentParams::zeros({CellKind::basic, 1, 2});
    p.values.pop_back();
    EXPECT_THROW(recurrent_forward(p, panel), ShapeError);
    EXPECT_THROW(RecurrentParams::zeros({CellKind::basic, 0, 2}), ShapeError);
    const auto q = RecurrentParams::zeros({CellKind::basic, 1, 2});
    const std::vector<double> wide{1.0, 2.0};
    EXPECT_THROW(cell_step(q, 0, wide, {{0, 0}, {}}), ShapeError);
    EXPECT_THROW(cell_step(q, 3, std::vector<double>{1.0}, {{0, 0}, {}}), ShapeError);
}

TEST(RecurrentForward, CellKindNames) {
    EXPECT_EQ(parse_cell_kind("rnn"), CellKind::basic);
    EXPECT_EQ(parse_cell_kind("basic"), CellKind::basic);
    EXPECT_EQ(parse_cell_kind("lstm"), CellKind::lstm);
    EXPECT_EQ(parse_cell_kind("gru"), CellKind::gru);
    EXPECT_THROW(parse_cell_kind("tcn"), ConfigError);
    EXPECT_EQ(gate_count(CellKind::lstm), 4u);
    EXPECT_EQ(gate_count(CellKind::gru), 3u);
}

TEST(RecurrentForward, DeterministicOutputs) {
    Rng rng(3);
    const auto panel = oracle::random_panel(rng, 3, 6);
    const auto p = RecurrentParams::random({CellKind::lstm, 2, 3}, 8);
    EXPECT_EQ(recurrent_forward(p, panel), recurrent_forward(p, panel));
}

namespace emhnet {
void PrintTo(CellKind kind, std::ostream* os) { *os << to_string(kind); }
}  // namespace emhnet

class RecurrentGradient : public ::testing::TestWithParam<CellKind> {};

TEST_P(RecurrentGradient, MatchesFiniteDifferencesOnRandomShapes) {
    Rng rng(1000 + int(GetParam()));
    for (int trial = 0; trial < 100; ++trial)
        EXPECT_LT(oracle::recurrent_trial(rng, GetParam()), 1e-6) << "trial " << trial;
}

TEST_P(RecurrentGradient, ZeroAtExactFit) {
    Rng rng(5);
    const auto panel = oracle::random_panel(rng, 2, 5);
    auto p = RecurrentParams::random({GetParam(), 1, 2}, 3);
    for (auto& w : p.readout_weights()) w = 0.0;
    p.readout_bias() = 0.0;
    // Replace the targets with the network's own output (zero everywhere).
    PaddedPanel zero_targets = panel;
    for (std::size_t n = 0; n < panel.series_count(); ++n)
        for (std::size_t t = 0; t < panel.steps(); ++t) zero_targets.at(n, t, PaddedPanel::kCurrent) = 0.0;
    const auto [loss, grad] = recurrent_backward(p, zero_targets, false);
    EXPECT_EQ(loss.mse, 0.0);
    for (double g : grad.values) EXPECT_EQ(g, 0.0);
}

TEST_P(RecurrentGradient, DoublingResidualsDoublesReadoutBiasGradient) {
    Rng rng(6);
    const auto panel = oracle::random_panel(rng, 3, 6);
    const auto p = RecurrentParams::random({GetParam(), 1, 3}, 4);
    const auto pred = recurrent_forward(p, panel);
    PaddedPanel doubled = panel;
    for (std::size_t n = 0; n < panel.series_count(); ++n)
        for (std::size_t t = 0; t < panel.steps(); ++t) {
            const double r = panel.at(n, t, PaddedPanel::kCurrent) - pred[n * panel.steps() + t];
            doubled.at(n, t, PaddedPanel::kCurrent) = pred[n * panel.steps() + t] + 2.0 * r;
        }
    const std::size_t b = p.shape.readout_bias_offset();
    const double g1 = recurrent_backward(p, panel, false).second.values[b];
    const double g2 = recurrent_backward(p, doubled, false).second.values[b];
    EXPECT_NEAR(g2, 2.0 * g1, 1e-12 * std::max(1.0, std::abs(g1)));
}

INSTANTIATE_TEST_SUITE_P(AllCells, RecurrentGradient,
                         ::testing::Values(CellKind::basic, CellKind::lstm, CellKind::gru),
                         [](const auto& info) { return std::string(to_string(info.param)); });
