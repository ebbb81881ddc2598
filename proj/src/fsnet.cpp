#include "specmix/fsnet.hpp"

#include <cmath>
#include <numeric>
#include <span>

#include "specmix/ops.hpp"

namespace specmix {
namespace {

Tensor uniform(ad::Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> data(ad::numel_of(shape));
  for (auto& v : data) v = dist(rng);
  return Tensor::from(std::move(shape), std::move(data), true);
}

void append_mha(std::vector<std::pair<std::string, Tensor>>& out, const std::string& prefix,
                const ad::MultiHeadParams& p) {
  for (std::size_t h = 0; h < p.heads; ++h) {
    const std::string idx = std::to_string(h);
    out.emplace_back(prefix + "wq." + idx, p.wq[h]);
    out.emplace_back(prefix + "wk." + idx, p.wk[h]);
    out.emplace_back(prefix + "wv." + idx, p.wv[h]);
  }
  out.emplace_back(prefix + "wo", p.wo);
}

}  // namespace

AnParams AnParams::init(std::size_t bands, std::size_t heads, std::mt19937_64& rng) {
  AnParams an;
  an.mha = ad::MultiHeadParams::random(bands, heads, rng);
  const auto ident = ad::MultiHeadParams::identity(bands, heads);
  an.mha.wv = ident.wv;
  an.mha.wo = ident.wo;
  return an;
}

ApParams ApParams::init(std::size_t bands, std::size_t endmembers, std::size_t heads, std::mt19937_64& rng) {
  ApParams ap;
  ap.w_in = uniform({bands, bands}, bands, rng);
  ap.b_in = uniform({bands}, bands, rng);
  ap.mha = ad::MultiHeadParams::random(bands, heads, rng);
  ap.w_out = uniform({bands, endmembers}, bands, rng);
  ap.b_out = uniform({endmembers}, bands, rng);
  return ap;
}

std::vector<Tensor> ApParams::parameters() const {
  std::vector<Tensor> out{w_in, b_in};
  for (auto& t : mha.parameters()) out.push_back(t);
  out.push_back(w_out);
  out.push_back(b_out);
  return out;
}

namespace {

// Identity slices alone give each head its own softmax over a band subset.
// For the current query q, bend W^K_h by a rank-one term so that
// (q W^Q_h)(k W^K_h)^T / sqrt(d_head) = q k^T / sqrt(L) for every key k.
// Every head then reproduces the single-head weights and, with identity
// value and output projections, the block output is unchanged.
void match_single_head_scores(ad::MultiHeadParams& b, std::span<const double> q) {
  const std::size_t bands = b.d_model, dh = b.d_head;
  const double qq = std::inner_product(q.begin(), q.end(), q.begin(), 0.0);
  if (qq == 0.0) return;  // all scores are zero either way
  const double c = std::sqrt(static_cast<double>(dh) / static_cast<double>(bands));
  for (std::size_t h = 0; h < b.heads; ++h) {
    auto wq = b.wq[h].mutable_data();
    std::vector<double> p(q.begin() + static_cast<std::ptrdiff_t>(h * dh),
                          q.begin() + static_cast<std::ptrdiff_t>((h + 1) * dh));
    double pp = std::inner_product(p.begin(), p.end(), p.begin(), 0.0);
    if (pp < 1e-24 * qq) {
      // query vanishes on this slice; route its direction through column 0
      const double qn = std::sqrt(qq);
      for (std::size_t l = 0; l < bands; ++l) wq[l * dh] += q[l] / qn;
      p[0] += qn;
      pp = std::inner_product(p.begin(), p.end(), p.begin(), 0.0);
    }
    auto wk = b.wk[h].mutable_data();
    for (std::size_t l = 0; l < bands; ++l) {
      const bool inside = l >= h * dh && l < (h + 1) * dh;
      const double r = c * q[l] - (inside ? p[l - h * dh] : 0.0);
      for (std::size_t j = 0; j < dh; ++j) wk[l * dh + j] += r * p[j] / pp;
    }
  }
}

}  // namespace

SpParams SpParams::init(const EndmemberEnsemble& ensemble, std::mt19937_64& rng) {
  SpParams sp;
  for (const auto& group : ensemble.groups) {
    const auto bands = static_cast<std::size_t>(group.cols());
    sp.blocks.push_back(ad::MultiHeadParams::identity(bands, 1));
    const Eigen::RowVectorXd centre = group.colwise().mean();
    std::normal_distribution<double> noise(0.0, 0.01 * centre.cwiseAbs().mean());
    std::vector<double> q(bands);
    for (std::size_t l = 0; l < bands; ++l) q[l] = centre(static_cast<Eigen::Index>(l)) + noise(rng);
    sp.queries.push_back(Tensor::from({1, bands}, std::move(q), true));
  }
  return sp;
}

SpParams SpParams::expanded(std::size_t heads) const {
  SpParams out;
  out.queries = queries;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    ad::MultiHeadParams b = ad::MultiHeadParams::identity(blocks[i].d_model, heads);
    if (heads > 1) match_single_head_scores(b, queries[i].data());
    out.blocks.push_back(std::move(b));
  }
  return out;
}

std::vector<Tensor> SpParams::block_parameters() const {
  std::vector<Tensor> out;
  for (const auto& b : blocks) {
    for (auto& t : b.parameters()) out.push_back(t);
  }
  return out;
}

void SpParams::freeze_blocks(bool frozen) {
  for (auto& b : blocks) b.set_requires_grad(!frozen);
}

Tensor an_forward(const AnParams& theta, const Tensor& pixels, const Tensor& neighbourhoods) {
  if (pixels.rank() != 2 || neighbourhoods.rank() != 3) {
    throw ad::ShapeError("an_forward: expected B x L pixels and B x Nn x L neighbourhoods");
  }
  const std::size_t batch = pixels.dim(0), bands = pixels.dim(1);
  if (neighbourhoods.dim(0) != batch || neighbourhoods.dim(2) != bands) {
    throw ad::ShapeError("an_forward: neighbourhoods " + ad::shape_str(neighbourhoods.shape()) +
                         " do not match pixels " + ad::shape_str(pixels.shape()));
  }
  if (neighbourhoods.dim(1) == 0) throw ad::ShapeError("an_forward: empty neighbourhood");
  Tensor query = ad::reshape(pixels, {batch, 1, bands});
  Tensor out = ad::multi_head_attention(theta.mha, query, neighbourhoods, neighbourhoods);
  return ad::reshape(out, {batch, bands});
}

Tensor ap_forward(const ApParams& psi, const Tensor& context) {
  if (context.rank() != 2 || context.dim(1) != psi.w_in.dim(0)) {
    throw ad::ShapeError("ap_forward: expected B x L input, got " + ad::shape_str(context.shape()));
  }
  const std::size_t batch = context.dim(0), bands = context.dim(1);
  Tensor hidden = ad::add(ad::matmul(context, psi.w_in), psi.b_in);
  Tensor token = ad::reshape(hidden, {batch, 1, bands});
  Tensor attended = ad::reshape(ad::multi_head_attention(psi.mha, token, token, token), {batch, bands});
  Tensor z = ad::add(attended, context);
  Tensor logits = ad::add(ad::matmul(z, psi.w_out), psi.b_out);
  return ad::softmax(logits);
}

Tensor sp_forward(const SpParams& sp, const std::vector<Tensor>& groups) {
  if (groups.size() != sp.blocks.size() || groups.size() != sp.queries.size()) {
    throw ad::ShapeError("sp_forward: " + std::to_string(groups.size()) + " ensemble groups for " +
                         std::to_string(sp.blocks.size()) + " blocks");
  }
  std::vector<Tensor> rows;
  rows.reserve(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& g = groups[i];
    if (g.rank() != 2 || g.dim(0) == 0 || g.dim(1) != sp.blocks[i].d_model) {
      throw ad::ShapeError("sp_forward: group " + std::to_string(i) + " has shape " + ad::shape_str(g.shape()));
    }
    if (i > 0 && g.dim(0) != groups[0].dim(0)) throw ad::ShapeError("sp_forward: ensemble group sizes differ");
    rows.push_back(ad::multi_head_attention(sp.blocks[i], sp.queries[i], g, g));
  }
  return ad::concat(rows, 0);
}

Tensor reconstruct(const Tensor& endmember_rows, const Tensor& abundances) {
  return ad::matmul(abundances, endmember_rows);
}

Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& signatures, const Eigen::MatrixXd& abundances) {
  if (signatures.cols() != abundances.rows()) throw ad::ShapeError("reconstruct: inner dimensions differ");
  return signatures * abundances;
}

Tensor rows_tensor(const Eigen::MatrixXd& m, bool requires_grad) {
  std::vector<double> data(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data[static_cast<std::size_t>(i * m.cols() + j)] = m(i, j);
  }
  return Tensor::from({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())}, std::move(data),
                      requires_grad);
}

Eigen::MatrixXd to_matrix(const Tensor& t) {
  if (t.rank() != 2) throw ad::ShapeError("to_matrix: rank-2 tensor required");
  const auto r = static_cast<Eigen::Index>(t.dim(0));
  const auto c = static_cast<Eigen::Index>(t.dim(1));
  Eigen::MatrixXd m(r, c);
  const auto d = t.data();
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = d[static_cast<std::size_t>(i * c + j)];
  }
  return m;
}

std::vector<Tensor> ensemble_tensors(const EndmemberEnsemble& ensemble) {
  std::vector<Tensor> out;
  for (const auto& g : ensemble.groups) out.push_back(rows_tensor(g));
  return out;
}

std::vector<std::pair<std::string, Tensor>> named_parameters(const AnParams& an) {
  std::vector<std::pair<std::string, Tensor>> out;
  append_mha(out, "an.", an.mha);
  return out;
}

std::vector<std::pair<std::string, Tensor>> named_parameters(const ApParams& ap) {
  std::vector<std::pair<std::string, Tensor>> out{{"ap.w_in", ap.w_in}, {"ap.b_in", ap.b_in}};
  append_mha(out, "ap.mha.", ap.mha);
  out.emplace_back("ap.w_out", ap.w_out);
  out.emplace_back("ap.b_out", ap.b_out);
  return out;
}

std::vector<std::pair<std::string, Tensor>> named_parameters(const SpParams& sp) {
  std::vector<std::pair<std::string, Tensor>> out;
  for (std::size_t i = 0; i < sp.blocks.size(); ++i) {
    append_mha(out, "sp.block." + std::to_string(i) + ".", sp.blocks[i]);
    out.emplace_back("sp.query." + std::to_string(i), sp.queries[i]);
  }
  return out;
}

}  // namespace specmix
