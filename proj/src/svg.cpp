#include "redcmp/svg.hpp"

#include <algorithm>
#include <cstdio>

namespace redcmp {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string short_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

}  // namespace

std::string loss_curve_svg(const LossCurve& curve, const std::string& config_hash) {
    constexpr double kW = 640, kH = 400;
    constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;
    const double plot_w = kW - kLeft - kRight;
    const double plot_h = kH - kTop - kBottom;

    const auto& ys = curve.epoch_loss;
    double lo = 0.0, hi = 1.0;
    if (!ys.empty()) {
        lo = *std::min_element(ys.begin(), ys.end());
        hi = *std::max_element(ys.begin(), ys.end());
        if (hi == lo) hi = lo + 1.0;
    }
    const auto n = ys.size();

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kW) + "\" height=\"" +
         num(kH) + "\" viewBox=\"0 0 " + num(kW) + " " + num(kH) + "\">\n";
    s += "<!-- config_hash=" + config_hash + " -->\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + num(kW / 2) + "\" y=\"20\" font-size=\"14\" text-anchor=\"middle\">" +
         curve.model_tag + " " + curve.dataset_tag + " L=" + std::to_string(curve.seq_len) +
         "</text>\n";

    // axes
    s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(kLeft) +
         "\" y2=\"" + num(kTop + plot_h) + "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(kTop + plot_h) + "\" x2=\"" +
         num(kLeft + plot_w) + "\" y2=\"" + num(kTop + plot_h) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"" + num(kH - 12) +
         "\" font-size=\"12\" text-anchor=\"middle\">epoch</text>\n";
    s += "<text x=\"18\" y=\"" + num(kTop + plot_h / 2) +
         "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
         num(kTop + plot_h / 2) + ")\">loss</text>\n";

    // range labels
    s += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(kTop + 4) +
         "\" font-size=\"10\" text-anchor=\"end\">" + short_num(hi) + "</text>\n";
    s += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(kTop + plot_h + 4) +
         "\" font-size=\"10\" text-anchor=\"end\">" + short_num(lo) + "</text>\n";
    s += "<text x=\"" + num(kLeft) + "\" y=\"" + num(kTop + plot_h + 16) +
         "\" font-size=\"10\" text-anchor=\"middle\">1</text>\n";
    s += "<text x=\"" + num(kLeft + plot_w) + "\" y=\"" + num(kTop + plot_h + 16) +
         "\" font-size=\"10\" text-anchor=\"middle\">" + std::to_string(n) + "</text>\n";

    if (n > 0) {
        s += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < n; ++i) {
            const double x =
                n == 1 ? kLeft + plot_w / 2
                       : kLeft + plot_w * static_cast<double>(i) / static_cast<double>(n - 1);
            const double y = kTop + plot_h * (1.0 - (ys[i] - lo) / (hi - lo));
            if (i) s += ' ';
            s += num(x) + "," + num(y);
        }
        s += "\"/>\n";
    }
    s += "</svg>\n";
    return s;
}

}  // namespace redcmp
