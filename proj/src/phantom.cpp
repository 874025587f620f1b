#include "volwindow/phantom.hpp"

#include <cmath>
#include <vector>

#include "volwindow/rng.hpp"

namespace volwindow {

PhantomCase make_phantom(const PhantomSpec& spec) {
    PhantomCase out;
    out.pet = Volume(spec.shape, spec.spacing);
    out.gt = MaskVolume(spec.shape, spec.spacing);

    CounterRng rng(spec.seed);
    struct Blob {
        std::array<double, 3> center;
        double radius;
        double amplitude;
    };
    std::vector<Blob> blobs;
    for (int k = 0; k < spec.lesions; ++k) {
        Blob b;
        for (int a = 0; a < 3; ++a)
            b.center[a] = (0.2 + 0.6 * rng.next_double()) * (spec.shape[a] - 1);
        b.radius = 2.0 + 2.5 * rng.next_double();
        b.amplitude = 3.0 + 5.0 * rng.next_double();
        blobs.push_back(b);
    }

    CounterRng noise = rng.split(1);
    const auto& s = spec.shape;
    for (int z = 0; z < s[2]; ++z)
        for (int y = 0; y < s[1]; ++y)
            for (int x = 0; x < s[0]; ++x) {
                // mild background gradient, like physiological uptake
                double v = 0.2 + 0.1 * (static_cast<double>(z) / s[2]) +
                           0.02 * noise.normal();
                bool lesion = false;
                for (const auto& b : blobs) {
                    const double dx = x - b.center[0];
                    const double dy = y - b.center[1];
                    const double dz = z - b.center[2];
                    const double d2 = dx * dx + dy * dy + dz * dz;
                    v += b.amplitude * std::exp(-d2 / (2.0 * b.radius * b.radius));
                    if (d2 <= b.radius * b.radius) lesion = true;
                }
                out.pet.at(x, y, z) = static_cast<float>(v);
                out.gt.at(x, y, z) = lesion ? 1 : 0;
            }
    return out;
}

} // namespace volwindow
