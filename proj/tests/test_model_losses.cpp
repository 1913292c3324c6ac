#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "singular_bound/errors.hpp"
#include "singular_bound/model_losses.hpp"
#include "singular_bound/rlct.hpp"

using namespace sb;

namespace {

MatrixCompletionTruth corner_truth(double sigma1) {
    Matrix U(2, 1), V(1, 2);
    U << 1.0, 0.0;
    V << 1.0, 0.0;
    return MatrixCompletionTruth::from_factors(U, V, 2, sigma1, 2.0);
}

Matrix random_matrix(Rng& rng, int rows, int cols, double scale = 1.0) {
    Matrix M(rows, cols);
    for (Eigen::Index a = 0; a < M.size(); ++a) M.data()[a] = scale * (2.0 * rng.uniform() - 1.0);
    return M;
}

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

}  // namespace

TEST_CASE("completion truth satisfies its rank-normal-form invariants") {
    const auto t = MatrixCompletionTruth::random(4, 3, 2, 3, 0.1, 2.0, 0.8, 17);
    CHECK_NOTHROW(t.validate());
    Matrix J = Matrix::Zero(4, 3);
    J(0, 0) = J(1, 1) = 1.0;
    CHECK((t.P0 * J * t.Q0 - t.M_star).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(Eigen::FullPivLU<Matrix>(t.M_star).rank() == 2);
    auto bad = t;
    bad.M_star(0, 0) += 1e-3;
    CHECK_THROWS_AS(bad.validate(), ConstraintError);
    CHECK_THROWS_AS(MatrixCompletionTruth::random(2, 2, 1, 3, 0.1, 2.0, 0.8, 1), ConstraintError);
}

TEST_CASE("generate_completion_data: trivial cases and determinism") {
    const auto t = MatrixCompletionTruth::random(3, 3, 1, 2, 0.0, 2.0, 0.8, 3);
    CHECK(generate_completion_data(t, 0, 1).n() == 0);
    const auto data = generate_completion_data(t, 500, 42);
    for (const auto& z : data.observations) {
        REQUIRE(z.i < 3);
        REQUIRE(z.j < 3);
        CHECK(z.y == t.M_star(z.i, z.j));
    }
    auto noisy = t;
    noisy.sigma1 = 0.3;
    const auto a = generate_completion_data(noisy, 200, 9), b = generate_completion_data(noisy, 200, 9);
    CHECK(dataset_to_csv(a) == dataset_to_csv(b));
    CHECK(dataset_to_csv(a) != dataset_to_csv(generate_completion_data(noisy, 200, 10)));
}

TEST_CASE("generate_completion_data: cell means follow the law of large numbers") {
    const auto t = MatrixCompletionTruth::random(2, 2, 1, 2, 0.1, 2.0, 0.8, 5);
    const auto data = generate_completion_data(t, 10000, 77);
    double sum = 0.0;
    int count = 0;
    for (const auto& z : data.observations)
        if (z.i == 0 && z.j == 0) sum += z.y, ++count;
    CHECK(count > 2000);
    CHECK(std::abs(sum / count - t.M_star(0, 0)) <= 3.0 * 0.1 / std::sqrt(count));
}

TEST_CASE("population_excess_risk_completion against hand and brute-force values") {
    const auto t = corner_truth(0.0);
    CHECK(population_excess_risk_completion(t.M_star, t) == 0.0);
    CHECK(population_excess_risk_completion(t.M_star + Matrix::Ones(2, 2), t) == doctest::Approx(1.0));
    CHECK_THROWS_AS(population_excess_risk_completion(Matrix::Zero(3, 2), t), ConstraintError);

    Rng rng(4, 0);
    const auto t34 = MatrixCompletionTruth::random(3, 4, 1, 2, 0.0, 2.0, 0.8, 8);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix M = random_matrix(rng, 3, 4);
        double brute = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 4; ++j) brute += (M(i, j) - t34.M_star(i, j)) * (M(i, j) - t34.M_star(i, j));
        CHECK(std::abs(population_excess_risk_completion(M, t34) - brute / 12.0) < 1e-12);
    }
}

TEST_CASE("population excess risk: nonnegative, zero only at the truth, row-permutation invariant") {
    Rng rng(21, 0);
    const auto t = MatrixCompletionTruth::random(4, 3, 1, 2, 0.0, 2.0, 0.8, 2);
    std::vector<int> perm{2, 0, 3, 1};
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix M = random_matrix(rng, 4, 3);
        const double r = population_excess_risk_completion(M, t);
        CHECK(r > 0.0);
        auto tp = t;
        Matrix Mp(4, 3);
        for (int i = 0; i < 4; ++i) {
            Mp.row(i) = M.row(perm[i]);
            tp.M_star.row(i) = t.M_star.row(perm[i]);
        }
        CHECK(std::abs(population_excess_risk_completion(Mp, tp) - r) < 1e-14);
    }
}

TEST_CASE("empirical excess risk: truth, hand arithmetic, empty data") {
    const auto t = corner_truth(0.0);
    const CompletionModel model(t);
    const auto data = model.generate(300, 1);
    CHECK(empirical_excess_risk(model.truth_parameters(), data, model) == 0.0);

    Matrix M = t.M_star;
    M(0, 0) = 2.0;
    Dataset one;
    one.kind = DataKind::completion;
    one.observations.push_back({0, 0, {}, 1.5});
    // (1.5 - 2)^2 - (1.5 - 1)^2 = 0
    CHECK(empirical_excess_risk(model.parameters_for(M), one, model) == doctest::Approx(0.0).epsilon(1e-15));
    M(0, 0) = 3.0;
    // (1.5 - 3)^2 - (1.5 - 1)^2 = 2
    CHECK(empirical_excess_risk(model.parameters_for(M), one, model) == doctest::Approx(2.0));
    CHECK_THROWS(empirical_excess_risk(model.truth_parameters(), Dataset{DataKind::completion, {}, 0}, model));
}

TEST_CASE("empirical excess risk converges to the population risk (completion)") {
    const auto t = MatrixCompletionTruth::random(2, 2, 1, 2, 0.5, 2.0, 0.8, 6);
    const CompletionModel model(t);
    Rng rng(31, 0);
    for (int trial = 0; trial < 3; ++trial) {
        std::vector<double> theta(model.dimension());
        for (double& v : theta) v = 2.0 * rng.uniform() - 1.0;
        const auto data = model.generate(100000, 100 + trial);
        std::vector<double> losses;
        for (const auto& z : data.observations) losses.push_back(model.excess_loss(theta, z));
        const double mean = std::accumulate(losses.begin(), losses.end(), 0.0) / losses.size();
        double ss = 0.0;
        for (double l : losses) ss += (l - mean) * (l - mean);
        const double se = std::sqrt(ss / (losses.size() - 1) / losses.size());
        CHECK(std::abs(empirical_excess_risk(theta, data, model) - model.population_excess_risk(theta)) < 4.0 * se);
        // bound sufficient statistics agree with the record-by-record average
        CHECK(std::abs(model.bind(data)(theta) - mean) < 1e-12);
    }
}

TEST_CASE("canonical-form sandwich holds on random instances") {
    Rng rng(41, 0);
    for (int trial = 0; trial < 100; ++trial) {
        const auto t = MatrixCompletionTruth::random(3, 3, 1, 2, 0.0, 4.0, 1.0, 500 + trial);
        const auto fb = frobenius_conjugation_bounds(t.P0, t.Q0);
        const Matrix M = random_matrix(rng, 3, 3, 2.0);
        const Matrix Mp = t.P0.inverse() * M * t.Q0.inverse();
        Matrix Mr = Matrix::Zero(3, 3);
        Mr(0, 0) = 1.0;
        const double canon = (Mp - Mr).squaredNorm();
        const double direct = (M - t.M_star).squaredNorm();
        CHECK(fb.lower * canon <= direct * (1 + 1e-9));
        CHECK(direct <= fb.upper * canon * (1 + 1e-9));
    }
}

TEST_CASE("relu_forward: trivial networks and a hand trace") {
    ReluNetwork zero{{3, 2}, {Matrix::Zero(2, 3)}, {Vector::Zero(2)}, 1.0};
    CHECK(relu_forward(zero, Vector::Ones(3)).isZero());

    ReluNetwork id{{2, 2}, {Matrix::Identity(2, 2)}, {Vector::Zero(2)}, 1.0};
    Vector x(2);
    x << 0.3, 1.7;
    CHECK(relu_forward(id, x) == x);

    // widths (2,2,1): h = relu(W1 x + b1) = relu([1*1 + -2*2 + 1, 3*1 + 1*2 - 1]) = relu([-2, 4]) = [0, 4]
    // out = relu(2*0 + 1*4 - 1) = 3
    Matrix W1(2, 2), W2(1, 2);
    W1 << 1, -2, 3, 1;
    W2 << 2, 1;
    Vector b1(2), b2(1);
    b1 << 1, -1;
    b2 << -1;
    ReluNetwork net{{2, 2, 1}, {W1, W2}, {b1, b2}, 10.0};
    Vector in(2);
    in << 1, 2;
    CHECK(relu_forward(net, in)(0) == 3.0);
    CHECK_THROWS_AS(relu_forward(net, Vector::Ones(3)), ConstraintError);
}

TEST_CASE("relu first-layer activations are positively homogeneous in the first-layer weights") {
    Rng rng(51, 0);
    for (int trial = 0; trial < 20; ++trial) {
        ReluNetwork net{{3, 4, 2}, {random_matrix(rng, 4, 3), random_matrix(rng, 2, 4)}, {Vector::Zero(4), Vector::Zero(2)}, 1};
        Vector x = random_matrix(rng, 3, 1);
        const double c = 3.0 * rng.uniform();
        auto scaled = net;
        scaled.weights[0] *= c;
        const auto a = relu_activations(net, x), b = relu_activations(scaled, x);
        CHECK((b[1] - c * a[1]).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("embedding a small network into a larger one preserves the function") {
    Rng rng(61, 0);
    std::vector<double> theta(relu_parameter_count(std::vector<int>{2, 2, 1}));
    for (double& v : theta) v = 2.0 * rng.uniform() - 1.0;
    const auto small = ReluNetwork::unflatten({2, 2, 1}, theta);
    const auto big = embed_network(small, {2, 4, 4, 1});
    CHECK(big.parameter_count() == 37);
    for (int trial = 0; trial < 50; ++trial) {
        const Vector x = random_matrix(rng, 2, 1);
        CHECK(relu_forward(big, x)(0) == doctest::Approx(relu_forward(small, x)(0)).epsilon(1e-14));
    }
    CHECK(ReluNetwork::unflatten(small.widths, small.flatten()).flatten() == theta);
}

TEST_CASE("relu output bound dominates random networks in the box") {
    const std::vector<int> widths{2, 4, 4, 1};
    const double bound = relu_output_bound(widths, 1.0, -1.0, 1.0);
    CHECK(bound == doctest::Approx(53.0));
    Rng rng(71, 0);
    std::vector<double> theta(relu_parameter_count(widths));
    for (int trial = 0; trial < 200; ++trial) {
        for (double& v : theta) v = 2.0 * rng.uniform() - 1.0;
        const auto net = ReluNetwork::unflatten(widths, theta);
        CHECK(std::abs(relu_forward(net, random_matrix(rng, 2, 1))(0)) <= bound);
    }
}

TEST_CASE("relu regression model: empirical risk kernel, serial versus parallel") {
    const auto truth = ReluNetwork::unflatten({2, 2, 1}, std::vector<double>{1, -0.5, 0.5, 0.8, 0.1, -0.2, 0.7, -0.6, 0.05});
    const ReluRegressionModel model(truth, {2, 4, 4, 1}, 0.1, -1.0, 1.0);
    const auto data = model.generate(5000, 3);
    CHECK(model.population_excess_risk(model.truth_parameters()) == 0.0);
    CHECK(model.empirical_risk(model.truth_parameters(), data, Exec::serial) == 0.0);
    Rng rng(81, 0);
    std::vector<double> theta(model.dimension());
    for (double& v : theta) v = 2.0 * rng.uniform() - 1.0;
    const double serial = model.empirical_risk(theta, data, Exec::serial);
    CHECK(model.empirical_risk(theta, data, Exec::parallel) == serial);
    CHECK(std::abs(model.bind(data)(theta) - serial) < 1e-12);
    CHECK(std::abs(empirical_excess_risk(theta, data, model) - serial) < 1e-12);
}

TEST_CASE("logistic excess risk oracles") {
    const LogisticMargin margin{2.0, 0.25};
    std::vector<double> f(64), fs(64), eta(64);
    for (int a = 0; a < 64; ++a) {
        fs[a] = -0.5 + a / 63.0;
        eta[a] = sigmoid(fs[a]);
        f[a] = fs[a];
    }
    CHECK(logistic_excess_risk(f, fs, eta, margin) == doctest::Approx(0.0));

    // eta = 1/2, f* = 0, f = 1: log(1+e)/2 + log(1+e^-1)/2 - log 2
    const std::vector<double> one(1, 1.0), zero(1, 0.0), half(1, 0.5);
    const double expected = 0.5 * std::log1p(std::exp(1.0)) + 0.5 * std::log1p(std::exp(-1.0)) - std::log(2.0);
    CHECK(logistic_excess_risk(one, zero, half, margin) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(expected == doctest::Approx(0.1201).epsilon(1e-3));

    // quadratic expansion: excess ~ E[eta (1 - eta)] delta^2 / 2
    const double delta = 0.05;
    std::vector<double> fd(64);
    double curvature = 0.0;
    for (int a = 0; a < 64; ++a) {
        fd[a] = fs[a] + delta;
        curvature += eta[a] * (1 - eta[a]) / 64.0;
    }
    const double approx = 0.5 * curvature * delta * delta;
    CHECK(std::abs(logistic_excess_risk(fd, fs, eta, margin) - approx) < 0.2 * approx);

    const std::vector<double> bad_eta(1, 0.1);
    CHECK_THROWS_AS(logistic_excess_risk(zero, zero, bad_eta, margin), ConstraintError);
}

TEST_CASE("logistic model population risk matches its Monte Carlo average") {
    const LogisticModel model(0.3, 0.5, {2.0, 0.25});
    const std::vector<double> theta{-0.2, 1.1};
    const auto data = model.generate(200000, 5);
    CHECK(std::abs(empirical_excess_risk(theta, data, model) - model.population_excess_risk(theta)) < 0.005);
    for (const auto& z : data.observations) REQUIRE((z.y == 1.0 || z.y == -1.0));
    CHECK(*model.sup_deviation(theta) == doctest::Approx(0.5 + 0.6));
}

TEST_CASE("dataset csv round trip") {
    const auto t = MatrixCompletionTruth::random(3, 2, 1, 2, 0.2, 2.0, 0.8, 9);
    const auto data = generate_completion_data(t, 50, 4);
    const auto text = dataset_to_csv(data);
    CHECK(text.rfind("i,j,y\n", 0) == 0);
    CHECK(dataset_to_csv(dataset_from_csv(text, DataKind::completion)) == text);

    const LogisticModel lm(0.1, 0.2, {2.0, 0.25});
    const auto cls = lm.generate(20, 1);
    const auto ctext = dataset_to_csv(cls);
    CHECK(ctext.rfind("x0,y\n", 0) == 0);
    CHECK(dataset_to_csv(dataset_from_csv(ctext, DataKind::classification)) == ctext);
}
