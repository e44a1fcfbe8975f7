// Micro-benchmark comparing the parallel kernels against the serial
// reference loops. Prints per-kernel timings and the max elementwise
// deviation between the two implementations.

#include <chrono>
#include <cstdio>
#include <functional>

#include "evseg/kernels.hpp"
#include "evseg/rng.hpp"

using namespace evseg;

namespace {

Tensor random_tensor(Rng& rng, std::vector<int> shape) {
    Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
    return t;
}

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm-up
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void report(const char* name, double fast_ms, double ref_ms, double dev) {
    std::printf("%-24s fast %8.3f ms   ref %8.3f ms   speedup %5.2fx   max|diff| %.3e\n", name,
                fast_ms, ref_ms, ref_ms / fast_ms, dev);
}

}  // namespace

int main() {
    Rng rng(2024);

    {
        Tensor x = random_tensor(rng, {64, 64, 16});
        Tensor w = random_tensor(rng, {3, 3, 16, 32});
        Tensor b = random_tensor(rng, {32});
        Tensor fast, slow;
        const double tf = time_ms([&] { fast = kernels::conv2d_forward(x, w, b, 1, 1); }, 10);
        const double tr = time_ms([&] { slow = ref::conv2d_forward(x, w, b, 1, 1); }, 3);
        report("conv2d 64x64x16->32", tf, tr, max_abs_diff(fast, slow));
    }
    {
        Tensor x = random_tensor(rng, {64, 64, 32});
        Tensor w = random_tensor(rng, {3, 3, 1, 32});
        Tensor b;
        Tensor fast, slow;
        const double tf = time_ms([&] { fast = kernels::conv2d_forward(x, w, b, 1, 32); }, 10);
        const double tr = time_ms([&] { slow = ref::conv2d_forward(x, w, b, 1, 32); }, 3);
        report("dwconv2d 64x64x32", tf, tr, max_abs_diff(fast, slow));
    }
    {
        Tensor x = random_tensor(rng, {4, 16, 16, 32});
        Tensor w = random_tensor(rng, {2, 3, 3, 32, 32});
        Tensor b = random_tensor(rng, {32});
        Tensor fast, slow;
        const double tf = time_ms([&] { fast = kernels::conv3d_forward(x, w, b); }, 10);
        const double tr = time_ms([&] { slow = ref::conv3d_forward(x, w, b); }, 3);
        report("conv3d 4x16x16x32", tf, tr, max_abs_diff(fast, slow));
    }
    {
        Tensor a = random_tensor(rng, {256, 256});
        Tensor b = random_tensor(rng, {256, 256});
        Tensor fast, slow;
        const double tf = time_ms([&] { fast = kernels::matmul_nn(a, b); }, 20);
        const double tr = time_ms([&] { slow = ref::matmul_nn(a, b); }, 5);
        report("matmul 256x256", tf, tr, max_abs_diff(fast, slow));
    }
    {
        Tensor s = random_tensor(rng, {1024, 128});
        Tensor fast = s, slow = s;
        const double tf = time_ms(
            [&] {
                fast = s;
                kernels::softmax_rows_inplace(fast);
            },
            20);
        const double tr = time_ms(
            [&] {
                slow = s;
                ref::softmax_rows_inplace(slow);
            },
            5);
        report("softmax 1024x128", tf, tr, max_abs_diff(fast, slow));
    }
    {
        Tensor x = random_tensor(rng, {16, 16, 8});
        Tensor fast, slow;
        const double tf = time_ms([&] { fast = kernels::upsample_bilinear(x, 4); }, 50);
        const double tr = time_ms([&] { slow = ref::upsample_bilinear(x, 4); }, 10);
        report("bilinear x4 16x16x8", tf, tr, max_abs_diff(fast, slow));
    }
    return 0;
}
