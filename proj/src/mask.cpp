#include "clipsam/mask.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

namespace clipsam {

BinaryMask BinaryMask::from_tensor(const Tensor& map) {
    if (map.rank() != 2) throw ShapeError("BinaryMask::from_tensor expects an H×W map");
    BinaryMask m(map.dim(0), map.dim(1));
    for (std::size_t i = 0; i < map.numel(); ++i) m.bits_[i] = map[i] != 0.0 ? 1 : 0;
    return m;
}

std::size_t BinaryMask::count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

Tensor BinaryMask::to_tensor() const {
    Tensor t({h_, w_});
    for (std::size_t i = 0; i < bits_.size(); ++i) t[i] = bits_[i];
    return t;
}

std::vector<std::size_t> label_image(const BinaryMask& mask) {
    const std::size_t h = mask.height(), w = mask.width();
    std::vector<std::size_t> labels(h * w, 0);
    std::vector<std::size_t> stack;
    std::size_t next = 0;
    for (std::size_t start = 0; start < h * w; ++start) {
        if (!mask[start] || labels[start]) continue;
        labels[start] = ++next;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t cur = stack.back();
            stack.pop_back();
            const std::size_t cy = cur / w, cx = cur % w;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dy == 0 && dx == 0) continue;
                    if ((dy < 0 && cy == 0) || (dx < 0 && cx == 0) || (dy > 0 && cy + 1 == h) ||
                        (dx > 0 && cx + 1 == w))
                        continue;
                    const std::size_t nb = (cy + dy) * w + (cx + dx);
                    if (mask[nb] && !labels[nb]) {
                        labels[nb] = next;
                        stack.push_back(nb);
                    }
                }
            }
        }
    }
    return labels;
}

std::vector<Region> connected_components(const BinaryMask& mask) {
    const auto labels = label_image(mask);
    const std::size_t n = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
    std::vector<Region> regions(n);
    const std::size_t w = mask.width();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!labels[i]) continue;
        Region& r = regions[labels[i] - 1];
        const Pixel p{i / w, i % w};
        if (r.pixels.empty()) {
            r.bounds = {p.y, p.x, p.y, p.x};
        } else {
            r.bounds.y0 = std::min(r.bounds.y0, p.y);
            r.bounds.x0 = std::min(r.bounds.x0, p.x);
            r.bounds.y1 = std::max(r.bounds.y1, p.y);
            r.bounds.x1 = std::max(r.bounds.x1, p.x);
        }
        r.pixels.push_back(p);
    }
    return regions;
}

void write_prompts(std::ostream& os, const PromptSet& prompts) {
    for (const auto& p : prompts.points) os << "P " << p.x << ' ' << p.y << '\n';
    for (const auto& b : prompts.boxes) os << "B " << b.x << ' ' << b.y << ' ' << b.h << ' ' << b.w << '\n';
}

PromptSet read_prompts(std::istream& is) {
    PromptSet out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "P") {
            PromptPoint p;
            if (!(ls >> p.x >> p.y)) throw std::invalid_argument("bad point on prompt line " + std::to_string(lineno));
            out.points.push_back(p);
        } else if (tag == "B") {
            PromptBox b;
            if (!(ls >> b.x >> b.y >> b.h >> b.w))
                throw std::invalid_argument("bad box on prompt line " + std::to_string(lineno));
            out.boxes.push_back(b);
        } else {
            throw std::invalid_argument("unknown prompt record '" + tag + "' on line " + std::to_string(lineno));
        }
    }
    return out;
}

}  // namespace clipsam
