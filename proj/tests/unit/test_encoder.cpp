#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "hictl/corpus/vocab.hpp"
#include "hictl/encoder/encoder.hpp"
#include "hictl/error.hpp"
#include "hictl/numerics/functions.hpp"
#include "hictl/numerics/grad_check.hpp"
#include "hictl/numerics/ops.hpp"
#include "test_support.hpp"

using namespace hictl;
using namespace hictl::enc;
using hictl::corpus::kCls;
using hictl::corpus::kSep;
using hictl::testing::random_tensor;
using hictl::testing::weighted_sum;

namespace {

EncoderConfig tiny(int vocab = 30, int proj = 0) {
  EncoderConfig c;
  c.layers = 2;
  c.hidden_dim = 16;
  c.heads = 2;
  c.ffn_dim = 32;
  c.max_seq_len = 16;
  c.vocab_size = vocab;
  c.projection_dim = proj;
  return c;
}

// Counts scalars straight from the layer inventory rather than the closed form.
std::size_t enumerated_count(const EncoderConfig& c) {
  const std::size_t V = c.vocab_size, S = c.max_seq_len, H = c.hidden_dim, F = c.ffn_dim,
                    P = c.projection_width();
  std::size_t n = V * H + S * H + H + H;  // token, position, embedding norm
  for (int l = 0; l < c.layers; ++l) {
    n += 4 * (H * H + H);          // q, k, v, o with biases
    n += H + H;                    // ln1
    n += H * F + F + F * H + H;    // ffn
    n += H + H;                    // ln2
  }
  n += H * P + P + V;
  return n;
}

template <class T>
void zero_positions(Encoder<T>& m) {
  auto& pos = m.params()[*m.params().find("encoder/embed/position")].value;
  for (auto& v : pos.values()) v = T(0);
}

}  // namespace

TEST(EncoderConfig, Validation) {
  auto c = tiny();
  EXPECT_NO_THROW(c.validate());
  c.heads = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  c = tiny();
  c.layers = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = tiny();
  c.vocab_size = 0;
  EXPECT_THROW(Encoder<float>(c, 1), ConfigError);
}

TEST(Encoder, ParameterCountMatchesClosedForm) {
  for (auto c : {tiny(), tiny(50, 8), EncoderConfig{3, 24, 4, 40, 20, 77, 12, 0.0}}) {
    Encoder<float> m(c, 1);
    EXPECT_EQ(m.params().scalar_count(), parameter_count(c));
    EXPECT_EQ(parameter_count(c), enumerated_count(c));
  }
  // Desk default with a 200-word vocabulary.
  EncoderConfig d;
  d.vocab_size = 200;
  EXPECT_EQ(parameter_count(d), 200u * 64 + 64u * 64 + 128 + 2 * (4 * 64 * 64 + 4 * 64 + 2 * 64 * 256 + 256 + 64 + 4 * 64) +
                                    64u * 64 + 64 + 200);
}

TEST(Encoder, ShapesAndDeterminism) {
  Encoder<float> m(tiny(30, 8), 3);
  const std::vector<int> toks{kCls, 10, 11, 12, kSep};
  const auto h = m.encode(toks);
  EXPECT_EQ(h.dims(), (num::Shape{5, 16}));
  const auto h2 = m.encode(toks);
  EXPECT_EQ(h.values(), h2.values());
  const auto r = m.sentence_repr(toks);
  EXPECT_EQ(r.dims(), (num::Shape{8}));
  const std::vector<int> x{10, 11}, y{12};
  EXPECT_EQ(m.encode_pair(x, y).dims(), (num::Shape{8}));
  EXPECT_EQ(m.encode_pair(x, y).values(), m.encode_pair(x, y).values());
}

TEST(Encoder, InputErrors) {
  Encoder<float> m(tiny(), 3);
  EXPECT_THROW(m.encode(std::vector<int>{kCls, 30}), DataError);
  EXPECT_THROW(m.encode(std::vector<int>{kCls, -1}), DataError);
  EXPECT_THROW(m.encode(std::vector<int>(17, 10)), DataError);
  EXPECT_THROW(m.encode(std::vector<int>{}), DataError);
  EXPECT_THROW(m.sentence_repr(std::vector<int>{10, 11}), DataError);
  EXPECT_THROW(m.encode_pair(std::vector<int>(7, 10), std::vector<int>(7, 11)), DataError);
}

TEST(Encoder, PermutationEquivarianceWithoutPositions) {
  Encoder<double> m(tiny(), 5);
  zero_positions(m);
  const std::vector<int> a{kCls, 10, 11, 12, 13, kSep};
  const std::vector<int> b{kCls, 13, 12, kSep, 10, 11};
  const auto ha = m.encode(a);
  const auto hb = m.encode(b);
  for (int j = 0; j < 16; ++j) EXPECT_NEAR(ha.row(0)[j], hb.row(0)[j], 1e-5);
}

TEST(Encoder, OrderSensitivityWithPositions) {
  Encoder<float> m(tiny(), 7);
  const auto r1 = m.sentence_repr(std::vector<int>{kCls, 10, 11, kSep});
  const auto r2 = m.sentence_repr(std::vector<int>{kCls, 11, 10, kSep});
  EXPECT_NE(r1.values(), r2.values());
  const std::vector<int> x{10, 11, 12}, y{13, 14};
  EXPECT_NE(m.encode_pair(x, y).values(), m.encode_pair(y, x).values());
}

TEST(Encoder, ProjectionIsLinearMapOfFirstState) {
  Encoder<double> m(tiny(30, 8), 9);
  const std::vector<int> toks{kCls, 10, 11, kSep};
  const auto h = m.encode(toks);
  const auto r = m.sentence_repr(toks);
  const auto& w = m.params()[*m.params().find("encoder/proj/w")].value;
  const auto& b = m.params()[*m.params().find("encoder/proj/b")].value;
  for (int p = 0; p < 8; ++p) {
    double s = b[static_cast<std::size_t>(p)];
    for (int j = 0; j < 16; ++j) s += h.row(0)[j] * w[static_cast<std::size_t>(j * 8 + p)];
    EXPECT_NEAR(r[static_cast<std::size_t>(p)], s, 1e-12);
  }
}

TEST(Encoder, CastPreservesValues) {
  Encoder<float> m(tiny(), 2);
  auto d = m.cast<double>();
  const std::vector<int> toks{kCls, 10, kSep};
  const auto hf = m.encode(toks);
  const auto hd = d.encode(toks);
  for (std::size_t i = 0; i < hf.size(); ++i) EXPECT_NEAR(hf[i], hd[i], 1e-4);
}

TEST(Encoder, AdoptsMatchingParametersOnly) {
  Encoder<float> m(tiny(), 2);
  EXPECT_NO_THROW(Encoder<float>(tiny(), m.params()));
  EXPECT_THROW(Encoder<float>(tiny(31), m.params()), ConfigError);
}

TEST(Encoder, SentenceReprGradientCheck) {
  Encoder<double> m(tiny(20, 6), 4);
  num::Rng rng(1);
  const auto c = random_tensor<double>({6}, rng);
  const std::vector<int> toks{kCls, 8, 9, 10, kSep, 11, kSep};
  auto res = num::grad_check<double>({&m.params()}, [&](num::Tape<double>& tp) {
    return weighted_sum(tp, m.sentence_repr(tp, toks), c);
  }, {.h = 1e-5, .max_coords_per_param = 24, .seed = 3});
  EXPECT_LT(res.max_rel_error, 1e-3) << res.worst_param << "[" << res.worst_index << "] " << res.worst_analytic
                                     << " vs " << res.worst_numeric;
  EXPECT_GT(res.coords_checked, 200u);
}

TEST(Encoder, LmLogitsUseTiedTable) {
  Encoder<double> m(tiny(), 6);
  num::Tape<double> tp(false);
  const std::vector<int> toks{kCls, 10, kSep};
  auto h = m.encode(tp, toks);
  auto logits = tp.value(m.lm_logits(tp, h));
  ASSERT_EQ(logits.dims(), (num::Shape{3, 30}));
  const auto& e = m.params()[*m.params().find("encoder/embed/token")].value;
  const auto& bias = m.params()[*m.params().find("encoder/lm/bias")].value;
  const auto& hv = tp.value(h);
  double s = bias[12];
  for (int j = 0; j < 16; ++j) s += hv.row(1)[j] * e.row(12)[j];
  EXPECT_NEAR(logits.row(1)[12], s, 1e-12);
}

TEST(Classifier, ShapesZeroHeadAndShiftInvariance) {
  Encoder<float> m(tiny(30, 8), 2);
  ClassifierHead<float> head(16, 2, false, 5);
  const std::vector<int> toks{kCls, 10, 11, kSep};
  {
    num::Tape<float> tp(false);
    const auto s = tp.value(classify(tp, m, head, toks));
    EXPECT_EQ(s.dims(), (num::Shape{2}));
  }
  for (auto& p : head.params) {
    for (auto& v : p.value.values()) v = 0.0f;
  }
  num::Tape<float> tp(false);
  const auto s = tp.value(classify(tp, m, head, toks));
  EXPECT_EQ(s[0], 0.0f);
  EXPECT_EQ(s[1], 0.0f);

  auto scores = num::Tensor<double>::vector({0.3, -1.2, 2.5});
  auto shifted = scores;
  for (auto& v : shifted.values()) v += 7.0;
  auto arg = [](const num::Tensor<double>& t) { return std::max_element(t.span().begin(), t.span().end()) - t.span().begin(); };
  EXPECT_EQ(arg(scores), arg(shifted));
}

TEST(Classifier, WidthMismatchIsDimError) {
  Encoder<float> m(tiny(30, 8), 2);
  ClassifierHead<float> on_hidden_wrong(8, 2, false, 5);
  ClassifierHead<float> on_proj_wrong(16, 2, true, 5);
  const std::vector<int> toks{kCls, 10, kSep};
  num::Tape<float> tp(false);
  EXPECT_THROW(classify(tp, m, on_hidden_wrong, toks), DimError);
  EXPECT_THROW(classify(tp, m, on_proj_wrong, toks), DimError);
}
