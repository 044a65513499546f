// Minimal end-to-end usage: simulate a small nonlinear dataset, train a
// functional autoencoder, and print one curve smoothed onto a fine grid.

#include <iostream>

#include "fae/experiment.hpp"
#include "fae/simgen.hpp"

int main() {
    fae::ScenarioConfig scenario = fae::preset("S1_2");
    scenario.n_samples = 400;
    scenario.seed = 7;
    const fae::GeneratedData data = fae::generate(scenario);

    fae::FaeConfig config;
    config.input_basis = fae::make_bspline_basis(0.0, 1.0, 10, 4);
    config.output_basis = config.input_basis;
    config.hidden_sizes = {16, 5, 16};
    config.activation = fae::Activation::Sigmoid;
    config.epochs = 300;
    config.batch_size = 64;
    config.optimizer.learning_rate = 0.02;
    config.seed = 7;

    const fae::FaeTraining trained = fae::fae_train(data.samples, config);
    std::cout << "training loss: " << trained.history.front() << " -> "
              << trained.history.back() << "\n";

    const fae::FunctionalSample& sample = data.samples.front();
    std::cout << "representation:";
    for (double v : fae::fae_encode(trained.model, sample)) std::cout << ' ' << v;
    std::cout << "\n\nt,observed\n";
    for (std::size_t j = 0; j < sample.times.size(); j += 10)
        std::cout << sample.times[j] << ',' << sample.values[j] << '\n';

    fae::Vector grid(101);
    for (int i = 0; i <= 100; ++i) grid[static_cast<std::size_t>(i)] = i / 100.0;
    const fae::Vector smooth = fae::fae_smooth(trained.model, sample, grid);
    std::cout << "\nt,smoothed\n";
    for (std::size_t j = 0; j < grid.size(); j += 20)
        std::cout << grid[j] << ',' << smooth[j] << '\n';
    return 0;
}
