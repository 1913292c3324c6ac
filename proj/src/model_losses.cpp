#include "singular_bound/model_losses.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "singular_bound/errors.hpp"
#include "singular_bound/io.hpp"
#include "singular_bound/quadrature.hpp"

namespace sb {

namespace {

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double logistic_loss(double f, double y) { return softplus(-y * f); }

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

int numerical_rank(const Matrix& A, double rel_tol = 1e-9) {
    if (A.size() == 0) return 0;
    Eigen::JacobiSVD<Matrix> svd(A);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    int rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > rel_tol * s(0)) ++rank;
    return rank;
}

double min_singular_value(const Matrix& A) {
    Eigen::JacobiSVD<Matrix> svd(A);
    return svd.singularValues().minCoeff();
}

}  // namespace

// ---------------------------------------------------------------------------
// Dataset CSV

std::string dataset_to_csv(const Dataset& data) {
    std::ostringstream out;
    if (data.kind == DataKind::completion) {
        out << "i,j,y\n";
        for (const auto& o : data.observations) out << o.i << ',' << o.j << ',' << format_double(o.y) << '\n';
        return out.str();
    }
    const std::size_t p = data.observations.empty() ? 0 : data.observations.front().x.size();
    for (std::size_t a = 0; a < p; ++a) out << 'x' << a << ',';
    out << "y\n";
    for (const auto& o : data.observations) {
        for (double v : o.x) out << format_double(v) << ',';
        out << format_double(o.y) << '\n';
    }
    return out.str();
}

Dataset dataset_from_csv(const std::string& text, DataKind kind) {
    Dataset data;
    data.kind = kind;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) return data;
    const auto header = split(trim(line), ',');
    if (kind == DataKind::completion && (header.size() != 3 || header[0] != "i" || header[1] != "j" || header[2] != "y"))
        throw std::invalid_argument("completion CSV must have header i,j,y");
    if (header.empty() || header.back() != "y") throw std::invalid_argument("CSV header must end with y");
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto cells = split(t, ',');
        if (cells.size() != header.size()) throw std::invalid_argument("CSV row has wrong number of fields");
        Observation o;
        if (kind == DataKind::completion) {
            o.i = static_cast<std::uint32_t>(parse_int(cells[0]));
            o.j = static_cast<std::uint32_t>(parse_int(cells[1]));
        } else {
            for (std::size_t a = 0; a + 1 < cells.size(); ++a) o.x.push_back(parse_double(cells[a]));
        }
        o.y = parse_double(cells.back());
        if (kind == DataKind::classification && o.y != 1.0 && o.y != -1.0)
            throw std::invalid_argument("classification labels must be -1 or +1");
        data.observations.push_back(std::move(o));
    }
    return data;
}

// ---------------------------------------------------------------------------
// Matrix completion truth

void MatrixCompletionTruth::validate() const {
    if (d1 < 1 || d2 < 1 || r < 1) throw ConstraintError("completion truth: d1, d2, r must be positive");
    if (!(r <= H && H <= std::min(d1, d2))) throw ConstraintError("completion truth: need r <= H <= min(d1, d2)");
    if (H + r > d1 + d2) throw ConstraintError("completion truth: need H + r <= d1 + d2");
    if (sigma1 < 0.0) throw ConstraintError("completion truth: sigma1 must be nonnegative");
    if (!(B1 > 0.0)) throw ConstraintError("completion truth: B1 must be positive");
    if (M_star.rows() != d1 || M_star.cols() != d2) throw ConstraintError("completion truth: M_star shape");
    if (P0.rows() != d1 || P0.cols() != d1 || Q0.rows() != d2 || Q0.cols() != d2)
        throw ConstraintError("completion truth: P0/Q0 shape");
    if (numerical_rank(M_star) != r) throw ConstraintError("completion truth: rank(M_star) != r");
    if (min_singular_value(P0) <= 1e-12 || min_singular_value(Q0) <= 1e-12)
        throw ConstraintError("completion truth: P0 and Q0 must be invertible");
    Matrix J = Matrix::Zero(d1, d2);
    for (int a = 0; a < r; ++a) J(a, a) = 1.0;
    const Matrix rebuilt = P0 * J * Q0;
    if ((rebuilt - M_star).cwiseAbs().maxCoeff() > 1e-10)
        throw ConstraintError("completion truth: P0 diag(I_r,0) Q0 does not reproduce M_star");
    if (M_star.cwiseAbs().maxCoeff() > B1) throw ConstraintError("completion truth: |M_star| exceeds B1");
}

MatrixCompletionTruth MatrixCompletionTruth::from_factors(const Matrix& U_star, const Matrix& V_star, int H,
                                                          double sigma1, double B1) {
    if (U_star.cols() != V_star.rows()) throw ConstraintError("from_factors: inner dimensions differ");
    MatrixCompletionTruth t;
    t.d1 = static_cast<int>(U_star.rows());
    t.d2 = static_cast<int>(V_star.cols());
    t.r = static_cast<int>(U_star.cols());
    t.H = H;
    t.sigma1 = sigma1;
    t.B1 = B1;
    t.M_star = U_star * V_star;

    Eigen::JacobiSVD<Matrix> su(U_star, Eigen::ComputeFullU);
    t.P0 = Matrix(t.d1, t.d1);
    t.P0.leftCols(t.r) = U_star;
    t.P0.rightCols(t.d1 - t.r) = su.matrixU().rightCols(t.d1 - t.r);

    Eigen::JacobiSVD<Matrix> sv(V_star, Eigen::ComputeFullV);
    t.Q0 = Matrix(t.d2, t.d2);
    t.Q0.topRows(t.r) = V_star;
    t.Q0.bottomRows(t.d2 - t.r) = sv.matrixV().rightCols(t.d2 - t.r).transpose();

    t.validate();
    return t;
}

MatrixCompletionTruth MatrixCompletionTruth::random(int d1, int d2, int r, int H, double sigma1, double B1,
                                                    double scale, std::uint64_t seed) {
    if (d1 < 1 || d2 < 1 || r < 1 || r > std::min(d1, d2)) throw ConstraintError("random truth: bad dimensions");
    Rng rng(seed, label_hash("completion-truth"));
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Matrix U(d1, r), V(r, d2);
        for (Eigen::Index a = 0; a < U.size(); ++a) U.data()[a] = scale * (2.0 * rng.uniform() - 1.0);
        for (Eigen::Index a = 0; a < V.size(); ++a) V.data()[a] = scale * (2.0 * rng.uniform() - 1.0);
        const Matrix M = U * V;
        if (numerical_rank(M, 1e-6) != r || M.cwiseAbs().maxCoeff() > B1) continue;
        if (numerical_rank(U, 1e-6) != r || numerical_rank(V, 1e-6) != r) continue;
        return from_factors(U, V, H, sigma1, B1);
    }
    throw ConstraintError("random truth: could not draw a rank-r truth within B1");
}

Dataset generate_completion_data(const MatrixCompletionTruth& truth, std::size_t n, std::uint64_t seed) {
    return CompletionModel(truth).generate(n, seed);
}

double population_excess_risk_completion(const Matrix& M, const MatrixCompletionTruth& truth) {
    if (M.rows() != truth.M_star.rows() || M.cols() != truth.M_star.cols())
        throw ConstraintError("population_excess_risk_completion: shape mismatch");
    return (M - truth.M_star).squaredNorm() / static_cast<double>(M.rows() * M.cols());
}

// ---------------------------------------------------------------------------
// ReLU networks

void ReluNetwork::validate() const {
    if (widths.size() < 2) throw ConstraintError("relu network: need at least two layers");
    for (int w : widths)
        if (w < 1) throw ConstraintError("relu network: widths must be positive");
    if (weights.size() != widths.size() - 1 || biases.size() != widths.size() - 1)
        throw ConstraintError("relu network: need N-1 weight matrices and bias vectors");
    for (std::size_t k = 1; k < widths.size(); ++k) {
        if (weights[k - 1].rows() != widths[k] || weights[k - 1].cols() != widths[k - 1])
            throw ConstraintError("relu network: weight shape inconsistent with widths");
        if (biases[k - 1].size() != widths[k]) throw ConstraintError("relu network: bias length inconsistent");
    }
}

std::size_t relu_parameter_count(std::span<const int> widths) {
    std::size_t count = 0;
    for (std::size_t k = 1; k < widths.size(); ++k)
        count += static_cast<std::size_t>(widths[k]) * static_cast<std::size_t>(widths[k - 1] + 1);
    return count;
}

std::size_t ReluNetwork::parameter_count() const { return relu_parameter_count(widths); }

std::vector<double> ReluNetwork::flatten() const {
    std::vector<double> theta;
    theta.reserve(parameter_count());
    for (std::size_t k = 0; k < weights.size(); ++k) {
        theta.insert(theta.end(), weights[k].data(), weights[k].data() + weights[k].size());
        theta.insert(theta.end(), biases[k].data(), biases[k].data() + biases[k].size());
    }
    return theta;
}

ReluNetwork ReluNetwork::unflatten(const std::vector<int>& widths, std::span<const double> theta) {
    if (theta.size() != relu_parameter_count(widths)) throw ConstraintError("relu unflatten: parameter count");
    ReluNetwork net;
    net.widths = widths;
    std::size_t off = 0;
    for (std::size_t k = 1; k < widths.size(); ++k) {
        Matrix W(widths[k], widths[k - 1]);
        std::copy_n(theta.data() + off, W.size(), W.data());
        off += static_cast<std::size_t>(W.size());
        Vector b(widths[k]);
        std::copy_n(theta.data() + off, b.size(), b.data());
        off += static_cast<std::size_t>(b.size());
        net.weights.push_back(std::move(W));
        net.biases.push_back(std::move(b));
    }
    return net;
}

std::vector<Vector> relu_activations(const ReluNetwork& net, const Vector& x) {
    net.validate();
    if (x.size() != net.widths.front()) throw ConstraintError("relu_forward: input dimension mismatch");
    std::vector<Vector> acts{x};
    for (std::size_t k = 0; k < net.weights.size(); ++k)
        acts.push_back((net.weights[k] * acts.back() + net.biases[k]).cwiseMax(0.0));
    return acts;
}

Vector relu_forward(const ReluNetwork& net, const Vector& x) { return relu_activations(net, x).back(); }

ReluNetwork embed_network(const ReluNetwork& truth, const std::vector<int>& widths) {
    truth.validate();
    const std::size_t Ns = truth.widths.size();
    const std::size_t N = widths.size();
    if (Ns > N || truth.widths.front() != widths.front() || truth.widths.back() != widths.back())
        throw ConstraintError("embed_network: truth must share input/output widths and be no deeper");
    for (std::size_t k = 1; k + 1 < Ns; ++k)
        if (truth.widths[k] > widths[k]) throw ConstraintError("embed_network: truth layer wider than model");
    const int carried = truth.widths[Ns - 2];
    if (Ns < N) {
        if (Ns == 2) throw ConstraintError("embed_network: cannot pass raw inputs through ReLU identity layers");
        for (std::size_t k = Ns - 1; k + 1 < N; ++k)
            if (widths[k] < carried) throw ConstraintError("embed_network: pass-through layer too narrow");
    }

    ReluNetwork net;
    net.widths = widths;
    net.B2 = truth.B2;
    for (std::size_t k = 1; k < N; ++k) {
        Matrix W = Matrix::Zero(widths[k], widths[k - 1]);
        Vector b = Vector::Zero(widths[k]);
        if (k + 1 < Ns) {
            W.topLeftCorner(truth.widths[k], truth.widths[k - 1]) = truth.weights[k - 1];
            b.head(truth.widths[k]) = truth.biases[k - 1];
        } else if (k + 1 < N) {
            for (int a = 0; a < carried; ++a) W(a, a) = 1.0;
        } else {
            W.topLeftCorner(widths[k], carried) = truth.weights[Ns - 2];
            b = truth.biases[Ns - 2];
        }
        net.weights.push_back(std::move(W));
        net.biases.push_back(std::move(b));
    }
    return net;
}

double relu_output_bound(std::span<const int> widths, double param_bound, double input_lo, double input_hi) {
    if (widths.size() < 2) throw ConstraintError("relu_output_bound: need at least two layers");
    double magnitude = std::max(std::abs(input_lo), std::abs(input_hi));
    double hi = 0.0;
    for (std::size_t k = 1; k < widths.size(); ++k) {
        hi = param_bound * (static_cast<double>(widths[k - 1]) * magnitude + 1.0);
        magnitude = hi;  // post-ReLU activations lie in [0, hi]
    }
    return hi;
}

// ---------------------------------------------------------------------------
// Logistic

double logistic_excess_risk(std::span<const double> f_values, std::span<const double> fstar_values,
                            std::span<const double> eta, const LogisticMargin& margin) {
    if (f_values.size() != fstar_values.size() || f_values.size() != eta.size() || f_values.empty())
        throw ConstraintError("logistic_excess_risk: inputs must be nonempty and of equal length");
    KahanSum acc;
    for (std::size_t a = 0; a < f_values.size(); ++a) {
        const double f = f_values[a], fs = fstar_values[a], e = eta[a];
        if (std::abs(f) > margin.B3 + 1e-12) throw ConstraintError("logistic_excess_risk: |f| exceeds B3");
        if (e < margin.tau - 1e-12 || e > 1.0 - margin.tau + 1e-12)
            throw ConstraintError("logistic_excess_risk: margin condition tau <= eta <= 1 - tau violated");
        acc.add(e * (logistic_loss(f, 1.0) - logistic_loss(fs, 1.0)) +
                (1.0 - e) * (logistic_loss(f, -1.0) - logistic_loss(fs, -1.0)));
    }
    return acc.value() / static_cast<double>(f_values.size());
}

// ---------------------------------------------------------------------------
// LossModel

EmpiricalRisk LossModel::bind(const Dataset& data) const {
    return [this, &data](std::span<const double> theta) {
        KahanSum acc;
        for (const auto& z : data.observations) acc.add(excess_loss(theta, z));
        return acc.value() / static_cast<double>(data.n());
    };
}

Dataset LossModel::generate(std::size_t n, std::uint64_t seed) const {
    Dataset data;
    data.kind = data_kind();
    data.seed = seed;
    data.observations.reserve(n);
    Rng rng(seed, label_hash("data"));
    for (std::size_t k = 0; k < n; ++k) data.observations.push_back(draw(rng));
    return data;
}

double empirical_excess_risk(std::span<const double> theta, const Dataset& data, const LossModel& model) {
    if (data.n() == 0) throw ConstraintError("empirical_excess_risk: empty dataset");
    if (theta.size() != model.dimension()) throw ConstraintError("empirical_excess_risk: parameter dimension");
    return model.bind(data)(theta);
}

// ---------------------------------------------------------------------------
// CompletionModel

CompletionModel::CompletionModel(MatrixCompletionTruth truth) : truth_(std::move(truth)) { truth_.validate(); }

std::size_t CompletionModel::dimension() const {
    return static_cast<std::size_t>(truth_.H) * static_cast<std::size_t>(truth_.d1 + truth_.d2);
}

Matrix CompletionModel::product(std::span<const double> theta) const {
    if (theta.size() != dimension()) throw ConstraintError("completion: parameter dimension mismatch");
    Eigen::Map<const Matrix> U(theta.data(), truth_.d1, truth_.H);
    Eigen::Map<const Matrix> V(theta.data() + truth_.d1 * truth_.H, truth_.H, truth_.d2);
    return U * V;
}

std::vector<double> CompletionModel::parameters_for(const Matrix& M) const {
    if (truth_.H != truth_.d2) throw ConstraintError("parameters_for: requires H == d2");
    std::vector<double> theta(dimension(), 0.0);
    std::copy_n(M.data(), M.size(), theta.begin());
    for (int a = 0; a < truth_.H; ++a) theta[static_cast<std::size_t>(truth_.d1 * truth_.H + a * truth_.d2 + a)] = 1.0;
    return theta;
}

std::vector<double> CompletionModel::truth_parameters() const {
    // U = P0 restricted to its first r columns, V = Q0's first r rows, padded.
    std::vector<double> theta(dimension(), 0.0);
    Eigen::Map<Matrix> U(theta.data(), truth_.d1, truth_.H);
    Eigen::Map<Matrix> V(theta.data() + truth_.d1 * truth_.H, truth_.H, truth_.d2);
    U.leftCols(truth_.r) = truth_.P0.leftCols(truth_.r);
    V.topRows(truth_.r) = truth_.Q0.topRows(truth_.r);
    return theta;
}

double CompletionModel::population_excess_risk(std::span<const double> theta) const {
    return population_excess_risk_completion(product(theta), truth_);
}

double CompletionModel::excess_loss(std::span<const double> theta, const Observation& z) const {
    if (z.i >= static_cast<std::uint32_t>(truth_.d1) || z.j >= static_cast<std::uint32_t>(truth_.d2))
        throw ConstraintError("completion: observation index out of range");
    Eigen::Map<const Matrix> U(theta.data(), truth_.d1, truth_.H);
    Eigen::Map<const Matrix> V(theta.data() + truth_.d1 * truth_.H, truth_.H, truth_.d2);
    const double m = U.row(z.i).dot(V.col(z.j));
    const double ms = truth_.M_star(z.i, z.j);
    return (z.y - m) * (z.y - m) - (z.y - ms) * (z.y - ms);
}

Observation CompletionModel::draw(Rng& rng) const {
    Observation o;
    o.i = static_cast<std::uint32_t>(rng.below(static_cast<std::uint64_t>(truth_.d1)));
    o.j = static_cast<std::uint32_t>(rng.below(static_cast<std::uint64_t>(truth_.d2)));
    o.y = truth_.M_star(o.i, o.j) + truth_.sigma1 * rng.normal();
    return o;
}

EmpiricalRisk CompletionModel::bind(const Dataset& data) const {
    // (y - M)^2 - (y - M*)^2 = M^2 - M*^2 - 2 y (M - M*), so per-entry counts
    // and label sums are sufficient statistics.
    Matrix counts = Matrix::Zero(truth_.d1, truth_.d2);
    Matrix sums = Matrix::Zero(truth_.d1, truth_.d2);
    for (const auto& z : data.observations) {
        if (z.i >= static_cast<std::uint32_t>(truth_.d1) || z.j >= static_cast<std::uint32_t>(truth_.d2))
            throw ConstraintError("completion: observation index out of range");
        counts(z.i, z.j) += 1.0;
        sums(z.i, z.j) += z.y;
    }
    const double n = static_cast<double>(data.n());
    return [this, counts = std::move(counts), sums = std::move(sums), n](std::span<const double> theta) {
        const Matrix M = product(theta);
        const Matrix& Ms = truth_.M_star;
        double total = 0.0;
        for (Eigen::Index a = 0; a < M.size(); ++a) {
            const double m = M.data()[a], ms = Ms.data()[a];
            total += counts.data()[a] * (m * m - ms * ms) - 2.0 * sums.data()[a] * (m - ms);
        }
        return total / n;
    };
}

// ---------------------------------------------------------------------------
// ReluRegressionModel

ReluRegressionModel::ReluRegressionModel(ReluNetwork truth, std::vector<int> widths, double sigma2,
                                         double input_lo, double input_hi, std::size_t eval_points,
                                         std::uint64_t eval_seed)
    : truth_(std::move(truth)),
      widths_(std::move(widths)),
      sigma2_(sigma2),
      input_lo_(input_lo),
      input_hi_(input_hi),
      parameter_count_(relu_parameter_count(widths_)) {
    truth_.validate();
    if (widths_.back() != 1) throw ConstraintError("relu regression: scalar output (H_N = 1) required");
    if (sigma2_ < 0.0) throw ConstraintError("relu regression: sigma2 must be nonnegative");
    if (!(input_lo_ < input_hi_)) throw ConstraintError("relu regression: empty input box");
    truth_embedded_ = embed_network(truth_, widths_).flatten();

    const std::size_t p = static_cast<std::size_t>(widths_.front());
    Rng rng(eval_seed, label_hash("relu-design"));
    eval_x_.resize(eval_points * p);
    for (double& v : eval_x_) v = input_lo_ + (input_hi_ - input_lo_) * rng.uniform();
    eval_fstar_.resize(eval_points);
    std::vector<double> scratch;
    for (std::size_t a = 0; a < eval_points; ++a)
        eval_fstar_[a] = forward(truth_embedded_, std::span<const double>(eval_x_.data() + a * p, p), scratch);
}

double ReluRegressionModel::forward(std::span<const double> theta, std::span<const double> x,
                                    std::vector<double>& scratch) const {
    const int max_width = *std::max_element(widths_.begin(), widths_.end());
    scratch.resize(2 * static_cast<std::size_t>(max_width));
    double* cur = scratch.data();
    double* next = scratch.data() + max_width;
    std::copy(x.begin(), x.end(), cur);
    std::size_t off = 0;
    for (std::size_t k = 1; k < widths_.size(); ++k) {
        const int in = widths_[k - 1], out = widths_[k];
        const double* W = theta.data() + off;
        const double* b = W + static_cast<std::ptrdiff_t>(in) * out;
        for (int o = 0; o < out; ++o) {
            double s = b[o];
            const double* row = W + static_cast<std::ptrdiff_t>(o) * in;
            for (int i = 0; i < in; ++i) s += row[i] * cur[i];
            next[o] = s > 0.0 ? s : 0.0;
        }
        off += static_cast<std::size_t>(in + 1) * static_cast<std::size_t>(out);
        std::swap(cur, next);
    }
    return cur[0];
}

double ReluRegressionModel::population_excess_risk(std::span<const double> theta) const {
    if (theta.size() != parameter_count_) throw ConstraintError("relu: parameter dimension mismatch");
    const std::size_t p = static_cast<std::size_t>(widths_.front());
    const std::size_t m = eval_fstar_.size();
    const double total = chunked_sum(
        m, 256,
        [&](std::size_t a) {
            thread_local std::vector<double> scratch;
            const double d = forward(theta, std::span<const double>(eval_x_.data() + a * p, p), scratch) - eval_fstar_[a];
            return d * d;
        },
        Exec::parallel);
    return total / static_cast<double>(m);
}

double ReluRegressionModel::excess_loss(std::span<const double> theta, const Observation& z) const {
    std::vector<double> scratch;
    const double f = forward(theta, z.x, scratch);
    const double fs = forward(truth_embedded_, z.x, scratch);
    return (z.y - f) * (z.y - f) - (z.y - fs) * (z.y - fs);
}

Observation ReluRegressionModel::draw(Rng& rng) const {
    Observation o;
    o.x.resize(static_cast<std::size_t>(widths_.front()));
    for (double& v : o.x) v = input_lo_ + (input_hi_ - input_lo_) * rng.uniform();
    std::vector<double> scratch;
    o.y = forward(truth_embedded_, o.x, scratch) + sigma2_ * rng.normal();
    return o;
}

double ReluRegressionModel::empirical_risk(std::span<const double> theta, const Dataset& data, Exec exec) const {
    if (data.n() == 0) throw ConstraintError("empirical risk: empty dataset");
    const double total = chunked_sum(
        data.n(), 256,
        [&](std::size_t k) {
            thread_local std::vector<double> scratch;
            const auto& z = data.observations[k];
            const double f = forward(theta, z.x, scratch);
            const double fs = forward(truth_embedded_, z.x, scratch);
            return (z.y - f) * (z.y - f) - (z.y - fs) * (z.y - fs);
        },
        exec);
    return total / static_cast<double>(data.n());
}

EmpiricalRisk ReluRegressionModel::bind(const Dataset& data) const {
    const std::size_t p = static_cast<std::size_t>(widths_.front());
    auto xs = std::make_shared<std::vector<double>>();
    auto ys = std::make_shared<std::vector<double>>();
    auto base = std::make_shared<std::vector<double>>();  // (y - f*)^2
    xs->reserve(data.n() * p);
    std::vector<double> scratch;
    for (const auto& z : data.observations) {
        if (z.x.size() != p) throw ConstraintError("relu: observation input dimension mismatch");
        xs->insert(xs->end(), z.x.begin(), z.x.end());
        ys->push_back(z.y);
        const double fs = forward(truth_embedded_, z.x, scratch);
        base->push_back((z.y - fs) * (z.y - fs));
    }
    const std::size_t n = data.n();
    return [this, xs, ys, base, n, p](std::span<const double> theta) {
        const double total = chunked_sum(
            n, 256,
            [&](std::size_t k) {
                thread_local std::vector<double> scratch;
                const double f = forward(theta, std::span<const double>(xs->data() + k * p, p), scratch);
                const double e = (*ys)[k] - f;
                return e * e - (*base)[k];
            },
            Exec::parallel);
        return total / static_cast<double>(n);
    };
}

// ---------------------------------------------------------------------------
// LogisticModel

LogisticModel::LogisticModel(double intercept, double slope, LogisticMargin margin)
    : intercept_(intercept), slope_(slope), margin_(margin) {
    if (!(margin_.tau > 0.0 && margin_.tau < 0.5)) throw ConstraintError("logistic: tau must lie in (0, 1/2)");
    if (!(margin_.B3 > 0.0)) throw ConstraintError("logistic: B3 must be positive");
    const double sup = std::abs(intercept_) + std::abs(slope_);
    if (sup > margin_.B3) throw ConstraintError("logistic: truth logit exceeds B3 on [-1, 1]");
    const double logit_cap = std::log((1.0 - margin_.tau) / margin_.tau);
    if (sup > logit_cap) throw ConstraintError("logistic: truth violates the margin condition");
    const auto rule = gauss_legendre(64);
    nodes_ = rule.nodes;
    weights_ = rule.weights;
    for (double& w : weights_) w *= 0.5;  // uniform density on [-1, 1]
}

double LogisticModel::population_excess_risk(std::span<const double> theta) const {
    if (theta.size() != 2) throw ConstraintError("logistic: parameter dimension mismatch");
    KahanSum acc;
    for (std::size_t a = 0; a < nodes_.size(); ++a) {
        const double x = nodes_[a];
        const double f = theta[0] + theta[1] * x;
        const double fs = intercept_ + slope_ * x;
        const double eta = sigmoid(fs);
        acc.add(weights_[a] * (eta * (logistic_loss(f, 1.0) - logistic_loss(fs, 1.0)) +
                               (1.0 - eta) * (logistic_loss(f, -1.0) - logistic_loss(fs, -1.0))));
    }
    return acc.value();
}

double LogisticModel::excess_loss(std::span<const double> theta, const Observation& z) const {
    const double x = z.x.at(0);
    const double f = theta[0] + theta[1] * x;
    const double fs = intercept_ + slope_ * x;
    return logistic_loss(f, z.y) - logistic_loss(fs, z.y);
}

Observation LogisticModel::draw(Rng& rng) const {
    Observation o;
    const double x = 2.0 * rng.uniform() - 1.0;
    o.x = {x};
    o.y = rng.uniform() < sigmoid(intercept_ + slope_ * x) ? 1.0 : -1.0;
    return o;
}

std::optional<double> LogisticModel::sup_deviation(std::span<const double> theta) const {
    return std::abs(theta[0] - intercept_) + std::abs(theta[1] - slope_);
}

// ---------------------------------------------------------------------------
// DeterministicRiskModel

DeterministicRiskModel::DeterministicRiskModel(std::size_t dim, std::function<double(std::span<const double>)> risk,
                                               std::vector<double> truth, std::string name)
    : dim_(dim), risk_(std::move(risk)), truth_(std::move(truth)), name_(std::move(name)) {}

}  // namespace sb
