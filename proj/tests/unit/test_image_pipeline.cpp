#include <doctest.h>

#include <random>

#include "psnis/errors.hpp"
#include "psnis/image_pipeline.hpp"
#include "psnis/prior_learning.hpp"
#include "synthetic.hpp"

using namespace psnis;

TEST_CASE("patch_offsets") {
  CHECK(patch_offsets(4, 2, 2) == std::vector<int>{0, 2});
  CHECK(patch_offsets(5, 2, 2) == std::vector<int>{0, 2, 3});
  CHECK(patch_offsets(8, 8, 2) == std::vector<int>{0});
  CHECK(patch_offsets(10, 3, 1) == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
  CHECK_THROWS_AS(patch_offsets(3, 4, 1), InvalidArgument);
  CHECK_THROWS_AS(patch_offsets(8, 2, 0), InvalidArgument);
}

TEST_CASE("every pixel is covered for all small geometries") {
  for (int dim = 1; dim <= 20; ++dim) {
    for (int p = 1; p <= dim; ++p) {
      for (int s = 1; s <= p; ++s) {
        std::vector<int> cover(static_cast<std::size_t>(dim), 0);
        const auto offs = patch_offsets(dim, p, s);
        for (std::size_t i = 1; i < offs.size(); ++i) CHECK(offs[i] > offs[i - 1]);
        for (int o : offs) {
          for (int i = o; i < o + p; ++i) ++cover[static_cast<std::size_t>(i)];
        }
        for (int c : cover) CHECK(c > 0);
        CHECK(offs.back() == dim - p);
      }
    }
  }
}

TEST_CASE("extract_patches order and content") {
  std::vector<double> px(5 * 4);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<double>(i);
  const ImageGrid img(5, 4, px);  // width 5, height 4
  const auto patches = extract_patches(img, 2, 2);
  REQUIRE(patches.size() == 2 * 3);
  CHECK(patches[0].row == 0);
  CHECK(patches[0].col == 0);
  CHECK(patches[2].col == 3);
  CHECK(patches[3].row == 2);
  Vector first(4);
  first << 0, 1, 5, 6;
  CHECK(patches[0].values == first);

  CHECK_THROWS_AS(extract_noisy_patches(ImageGrid(2, 2, {1.0, 2.5, 0.0, 1.0}), 2, 1),
                  InvalidArgument);
}

TEST_CASE("aggregate_patches") {
  SUBCASE("extracting and reassembling is the identity") {
    const ImageGrid img = synth::two_texture_image(20, 3);
    for (int stride : {1, 3, 5}) {
      const auto patches = extract_patches(img, 5, stride);
      std::vector<PatchEstimate> est;
      for (const auto& p : patches) est.push_back(PatchEstimate{p.values, 0, 0.0, p.row, p.col, {}, false});
      const ImageGrid back = aggregate_patches(est, 20, 20);
      for (std::size_t i = 0; i < img.size(); ++i) {
        CHECK(back.pixels()[i] == doctest::Approx(img.pixels()[i]).epsilon(1e-14));
      }
    }
  }
  SUBCASE("linear in the patch values") {
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    std::vector<PatchEstimate> a, b, mix;
    for (int r : patch_offsets(9, 4, 2)) {
      for (int c : patch_offsets(9, 4, 2)) {
        Vector va(16), vb(16);
        for (int i = 0; i < 16; ++i) {
          va[i] = u(gen);
          vb[i] = u(gen);
        }
        a.push_back({va, 0, 0.0, r, c, {}, false});
        b.push_back({vb, 0, 0.0, r, c, {}, false});
        mix.push_back({2.0 * va + 3.0 * vb, 0, 0.0, r, c, {}, false});
      }
    }
    const ImageGrid ia = aggregate_patches(a, 9, 9), ib = aggregate_patches(b, 9, 9),
                    im = aggregate_patches(mix, 9, 9);
    for (std::size_t i = 0; i < im.size(); ++i) {
      CHECK(im.pixels()[i] == doctest::Approx(2.0 * ia.pixels()[i] + 3.0 * ib.pixels()[i]).epsilon(1e-13));
    }
  }
  SUBCASE("uncovered pixel is a consistency error") {
    std::vector<PatchEstimate> one{{Vector::Ones(4), 0, 0.0, 0, 0, {}, false}};
    CHECK_THROWS_AS(aggregate_patches(one, 3, 3), ConsistencyError);
  }
  SUBCASE("merged accumulators equal one accumulator") {
    AccumulatorGrid whole(4, 4), left(4, 4), right(4, 4);
    const Vector v1 = Vector::Constant(4, 1.0), v2 = Vector::Constant(4, 5.0);
    whole.add(v1, 0, 0);
    whole.add(v2, 2, 2);
    left.add(v1, 0, 0);
    right.add(v2, 2, 2);
    left.merge(right);
    CHECK(left.counts() == whole.counts());
    CHECK_THROWS_AS(left.add(v1, 3, 3), InvalidArgument);
  }
}

TEST_CASE("psnr") {
  const ImageGrid zero(8, 8), ones(8, 8, std::vector<double>(64, 1.0)),
      full(8, 8, std::vector<double>(64, 255.0));
  CHECK(psnr(ones, zero, 255.0) == doctest::Approx(48.1308).epsilon(1e-5));
  CHECK(psnr(full, zero, 255.0) == doctest::Approx(0.0));
  CHECK(std::isinf(psnr(ones, ones, 255.0)));
  CHECK_THROWS_AS(psnr(ones, ImageGrid(4, 4), 255.0), InvalidArgument);
}

TEST_CASE("scale_to_peak") {
  const ImageGrid img(2, 2, {0.0, 51.0, 102.0, 255.0});
  const ImageGrid s = scale_to_peak(img, 10.0);
  CHECK(s.max_value() == 10.0);
  CHECK(s.at(0, 1) == doctest::Approx(2.0));
  CHECK(s.at(0, 0) == 0.0);
  const ImageGrid odd(1, 3, {0.3, 0.7, 0.9});
  CHECK(scale_to_peak(odd, 0.1).max_value() == 0.1);
  CHECK_THROWS_AS(scale_to_peak(ImageGrid(3, 3), 1.0), InvalidArgument);
  CHECK_THROWS_AS(scale_to_peak(img, 0.0), InvalidArgument);
  CHECK(to_display_range(s, 10.0).max_value() == doctest::Approx(255.0));
}

TEST_CASE("denoise_image") {
  const auto corpus = synth::class_corpus(6, 32, 5);
  const double peak = 4.0;
  const TrainingSet train = synth::corpus_patches(corpus, peak, 4, 2);
  LearnOptions opt;
  opt.k = 4;
  opt.cem_iters = 4;
  const PriorModel model = learn_prior(train, opt);

  DenoiseConfig cfg;
  cfg.patch_size = 4;
  cfg.stride = 2;
  cfg.k_count = 4;
  cfg.n1 = 60;
  cfg.n2 = 15;
  cfg.peak = peak;
  const ImageGrid clean = scale_to_peak(synth::two_texture_image(32, 999), peak);
  const ImageGrid noisy = sample_poisson_image(clean, 42);

  SUBCASE("output does not depend on the worker count") {
    DenoiseConfig many = cfg;
    many.workers = 3;
    const DenoiseResult a = denoise_image_detailed(noisy, model, cfg);
    const DenoiseResult b = denoise_image_detailed(noisy, model, many);
    CHECK(a.image == b.image);
    CHECK(a.mean_ess == b.mean_ess);
  }
  SUBCASE("denoising beats the raw counts on a class image") {
    const ImageGrid est = denoise_image(noisy, model, cfg);
    CHECK(est.width() == 32);
    CHECK(psnr(est, clean, peak) > psnr(noisy, clean, peak));
  }
  SUBCASE("patch size must match the model") {
    DenoiseConfig wrong = cfg;
    wrong.patch_size = 5;
    wrong.stride = 2;
    CHECK_THROWS_AS(denoise_image(noisy, model, wrong), InvalidArgument);
  }
  SUBCASE("bad stride is rejected") {
    DenoiseConfig wrong = cfg;
    wrong.stride = 0;
    CHECK_THROWS_AS(denoise_image(noisy, model, wrong), InvalidArgument);
  }
}

TEST_CASE("flat images: more light, better estimate") {
  // A prior learned on flat patches of several levels; the denoised error
  // shrinks as the peak grows.
  // One image of five 16-pixel bands so every level is scaled by one factor.
  const std::vector<double> levels{40.0, 90.0, 140.0, 200.0, 255.0};
  ImageGrid bands(80, 16);
  for (int r = 0; r < 16; ++r) {
    for (int c = 0; c < 80; ++c) bands.at(r, c) = levels[static_cast<std::size_t>(c / 16)];
  }
  const std::vector<ImageGrid> flats{bands};
  const ImageGrid target(16, 16, std::vector<double>(256, 140.0));
  double previous = -INFINITY, first = 0.0;
  for (double peak : {1.0, 10.0, 100.0}) {
    const TrainingSet train = synth::corpus_patches(flats, peak, 4, 4);
    LearnOptions opt;
    opt.k = 5;
    const PriorModel model = learn_prior(train, opt);
    DenoiseConfig cfg;
    cfg.patch_size = 4;
    cfg.stride = 2;
    cfg.peak = peak;
    const ImageGrid clean = scaled(target, peak / 255.0);
    double total = 0.0;
    for (std::uint64_t s = 0; s < 5; ++s) {
      const ImageGrid noisy = sample_poisson_image(clean, s);
      total += psnr(denoise_image(noisy, model, cfg), clean, peak);
    }
    const double mean_psnr = total / 5.0;
    CHECK(mean_psnr >= previous);
    if (peak == 1.0) first = mean_psnr;
    previous = mean_psnr;
  }
  CHECK(previous > first);
}
