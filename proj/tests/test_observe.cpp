#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pal/observe.hpp"
#include "support.hpp"

#include <jpeglib.h>
#include <png.h>

#include <cmath>
#include <csetjmp>
#include <map>
#include <random>

using namespace pal;
using Bytes = std::vector<std::uint8_t>;

namespace {

// libpng as an independent decoder.
ScreenFrame decode_png(const Bytes& data) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    REQUIRE(png_image_begin_read_from_memory(&image, data.data(), data.size()));
    image.format = PNG_FORMAT_RGB;
    ScreenFrame f;
    f.width = static_cast<int>(image.width);
    f.height = static_cast<int>(image.height);
    f.rgb.resize(PNG_IMAGE_SIZE(image));
    REQUIRE(png_image_finish_read(&image, nullptr, f.rgb.data(), 0, nullptr));
    return f;
}

ScreenFrame decode_jpeg(const Bytes& data) {
    jpeg_decompress_struct cinfo;
    jpeg_error_mgr jerr;
    cinfo.err = jpeg_std_error(&jerr);
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, data.data(), static_cast<unsigned long>(data.size()));
    REQUIRE(jpeg_read_header(&cinfo, TRUE) == JPEG_HEADER_OK);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    ScreenFrame f;
    f.width = static_cast<int>(cinfo.output_width);
    f.height = static_cast<int>(cinfo.output_height);
    f.rgb.resize(static_cast<std::size_t>(f.width) * f.height * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = &f.rgb[static_cast<std::size_t>(cinfo.output_scanline) * f.width * 3];
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return f;
}

std::uint32_t le(const Bytes& d, std::size_t at, int n) {
    std::uint32_t v = 0;
    for (int i = n - 1; i >= 0; --i) v = (v << 8) | d[at + i];
    return v;
}

// 24-bit bottom-up BMP, straight from the file format.
ScreenFrame decode_bmp(const Bytes& d) {
    REQUIRE(d[0] == 'B');
    REQUIRE(d[1] == 'M');
    REQUIRE(le(d, 2, 4) == d.size());
    const std::uint32_t offset = le(d, 10, 4);
    ScreenFrame f;
    f.width = static_cast<int>(le(d, 18, 4));
    f.height = static_cast<int>(le(d, 22, 4));
    REQUIRE(le(d, 28, 2) == 24);
    const std::size_t stride = (static_cast<std::size_t>(f.width) * 3 + 3) / 4 * 4;
    f.rgb.resize(static_cast<std::size_t>(f.width) * f.height * 3);
    for (int y = 0; y < f.height; ++y) {
        const std::uint8_t* row = &d[offset + (f.height - 1 - y) * stride];
        for (int x = 0; x < f.width; ++x) {
            auto* p = &f.rgb[(static_cast<std::size_t>(y) * f.width + x) * 3];
            p[0] = row[x * 3 + 2];
            p[1] = row[x * 3 + 1];
            p[2] = row[x * 3];
        }
    }
    return f;
}

std::uint32_t wbmp_int(const Bytes& d, std::size_t& at) {
    std::uint32_t v = 0;
    for (;;) {
        std::uint8_t b = d[at++];
        v = (v << 7) | (b & 0x7F);
        if (!(b & 0x80)) return v;
    }
}

// Returns 0/1 per pixel.
std::vector<int> decode_wbmp(const Bytes& d, int& w, int& h) {
    REQUIRE(d[0] == 0);
    REQUIRE(d[1] == 0);
    std::size_t at = 2;
    w = static_cast<int>(wbmp_int(d, at));
    h = static_cast<int>(wbmp_int(d, at));
    const int row = (w + 7) / 8;
    REQUIRE(d.size() == at + static_cast<std::size_t>(row) * h);
    std::vector<int> bits;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) bits.push_back((d[at + y * row + x / 8] >> (7 - x % 8)) & 1);
    }
    return bits;
}

// Single-image GIF with a global colour table.
ScreenFrame decode_gif(const Bytes& d) {
    REQUIRE(std::string(d.begin(), d.begin() + 6) == "GIF89a");
    ScreenFrame f;
    f.width = static_cast<int>(le(d, 6, 2));
    f.height = static_cast<int>(le(d, 8, 2));
    const std::uint8_t flags = d[10];
    REQUIRE(static_cast<bool>(flags & 0x80));
    const int table_size = 1 << ((flags & 7) + 1);
    std::size_t at = 13;
    std::vector<std::array<std::uint8_t, 3>> table(table_size);
    for (int i = 0; i < table_size; ++i, at += 3) table[i] = {d[at], d[at + 1], d[at + 2]};
    REQUIRE(d[at] == 0x2C);
    at += 10;
    const int min_code = d[at++];
    Bytes data;
    while (d[at] != 0) {
        int n = d[at++];
        data.insert(data.end(), d.begin() + static_cast<long>(at), d.begin() + static_cast<long>(at + n));
        at += n;
    }
    REQUIRE(d[at + 1] == 0x3B);

    const int clear = 1 << min_code, eoi = clear + 1;
    std::vector<Bytes> dict;
    int width = min_code + 1;
    auto reset = [&] {
        dict.assign(clear + 2, {});
        for (int i = 0; i < clear; ++i) dict[i] = {static_cast<std::uint8_t>(i)};
        width = min_code + 1;
    };
    reset();
    std::size_t bitpos = 0;
    auto read = [&] {
        int code = 0;
        for (int i = 0; i < width; ++i, ++bitpos) code |= ((data[bitpos / 8] >> (bitpos % 8)) & 1) << i;
        return code;
    };
    Bytes indices;
    int prev = -1;
    for (;;) {
        int code = read();
        if (code == clear) {
            reset();
            prev = -1;
            continue;
        }
        if (code == eoi) break;
        Bytes entry;
        if (code < static_cast<int>(dict.size())) {
            entry = dict[code];
            if (prev >= 0 && dict.size() < 4096) {
                Bytes add = dict[prev];
                add.push_back(entry[0]);
                dict.push_back(add);
            }
        } else {
            REQUIRE(prev >= 0);
            entry = dict[prev];
            entry.push_back(dict[prev][0]);
            if (dict.size() < 4096) dict.push_back(entry);
        }
        indices.insert(indices.end(), entry.begin(), entry.end());
        prev = code;
        if (static_cast<int>(dict.size()) == (1 << width) && width < 12) ++width;
    }
    REQUIRE(indices.size() == static_cast<std::size_t>(f.width) * f.height);
    for (auto i : indices) f.rgb.insert(f.rgb.end(), table[i].begin(), table[i].end());
    return f;
}

double psnr(const ScreenFrame& a, const ScreenFrame& b) {
    double se = 0;
    for (std::size_t i = 0; i < a.rgb.size(); ++i) {
        double e = double(a.rgb[i]) - double(b.rgb[i]);
        se += e * e;
    }
    double mse = se / static_cast<double>(a.rgb.size());
    return mse == 0 ? 99 : 10 * std::log10(255.0 * 255.0 / mse);
}

ScreenFrame noise_frame(int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ScreenFrame f{w, h, {}};
    for (int i = 0; i < w * h * 3; ++i) f.rgb.push_back(static_cast<std::uint8_t>(rng()));
    return f;
}

struct Scene {
    TaskDef def = generate_pogo(11);
    Rules rules = rules_for(def);
    WorldState s = initial_state(def);
};

}  // namespace

TEST_CASE("SENSE_ALL sections") {
    Scene sc;
    sc.s.inventory.add(ids::log, 2);
    sc.s.inventory.select(ids::log);
    SenseContext ctx{sc.s, sc.rules, sc.def.goal};
    auto o = sense_all(ctx, false);
    std::vector<std::string> names;
    for (const auto& [n, j] : o.sections) names.push_back(n);
    CHECK(names == std::vector<std::string>{"inventory", "player", "entities", "actorActions", "recipes", "goalSpec", "map"});

    CHECK((*o.section("inventory"))["items"]["minecraft:log"] == 2);
    CHECK((*o.section("inventory"))["selectedItem"] == "minecraft:log");
    const auto& player = *o.section("player");
    CHECK(player["pos"] == nlohmann::json{sc.def.spawn.x, sc.def.spawn.y, sc.def.spawn.z});
    CHECK(player["yaw"] == sc.def.spawn_yaw);
    CHECK((*o.section("recipes")).size() == sc.def.recipes.size());
    CHECK((*o.section("goalSpec"))["goalType"] == "POGOSTICK");

    // one entry per arena cell; logs are inaccessible, air is accessible
    const auto& map = *o.section("map");
    CHECK(map.size() == static_cast<std::size_t>(32 * 2 * 32));
    for (const auto& b : sc.def.blocks) {
        if (b.block != ids::log) continue;
        const auto& cell = map[to_string(b.pos)];
        CHECK(cell["name"] == "minecraft:log");
        CHECK(cell["isAccessible"] == false);
    }
    CHECK(map[to_string(sc.def.spawn)]["isAccessible"] == true);

    auto nonav = sense_all(ctx, true);
    const auto& bedrock = (*nonav.section("map"))["0,4,0"];
    CHECK(bedrock["attributes"]["breakable"] == false);
    CHECK(bedrock["attributes"]["solid"] == true);

    // the fragment splices into an object and reproduces to_json()
    auto spliced = nlohmann::json::parse("{" + o.fragment() + "}");
    CHECK(spliced == o.to_json());
}

TEST_CASE("SENSE parts match their SENSE_ALL section") {
    Scene sc;
    sc.s.actor_actions.push_back({3, "waved"});
    SenseContext ctx{sc.s, sc.rules, sc.def.goal};
    auto all = sense_all(ctx, false);
    const std::pair<SenseKind, const char*> parts[] = {{SenseKind::Inventory, "inventory"},
                                                       {SenseKind::Locations, "player"},
                                                       {SenseKind::Recipes, "recipes"},
                                                       {SenseKind::Entities, "entities"},
                                                       {SenseKind::ActorActions, "actorActions"}};
    for (auto [kind, name] : parts) {
        auto p = sense_part(ctx, kind);
        REQUIRE(p.sections.size() == 1);
        CHECK(p.sections[0].first == name);
        CHECK(p.sections[0].second == *all.section(name));
    }
}

TEST_CASE("property: sensing and rendering never mutate the state") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        TaskDef def = seed % 2 ? generate_huga(seed) : generate_pogo(seed);
        Rules rules = rules_for(def);
        WorldState s = initial_state(def);
        const WorldState before = s;
        SenseContext ctx{s, rules, def.goal};
        auto a = sense_all(ctx, false).fragment();
        auto b = sense_all(ctx, true).fragment();
        auto f1 = render_screen(s, def.palette, 64, 48);
        auto f2 = render_screen(s, def.palette, 64, 48);
        CHECK(s == before);
        CHECK(a == sense_all(ctx, false).fragment());
        CHECK(b == sense_all(ctx, true).fragment());
        CHECK(f1 == f2);
    }
}

TEST_CASE("render layout") {
    TaskDef def = testsupport::flat_task(10);
    def.blocks.push_back({{2, 4, 7}, ids::log});
    WorldState s = initial_state(def);
    s.agent.pos = {5, 4, 5};
    s.agent.yaw = 90;
    auto f = render_screen(s, def.palette, 100, 100);
    auto px = [&](int x, int y) {
        const auto* p = &f.rgb[(static_cast<std::size_t>(y) * 100 + x) * 3];
        return Rgb{p[0], p[1], p[2]};
    };
    // column (x, z) covers pixels x*10.., row (9 - z)*10..
    CHECK(px(25, 25) == def.palette.at(ids::log));
    CHECK(px(15, 15) == def.palette.at(ids::grass));
    CHECK(px(0, 50) == def.palette.at(ids::bedrock));
    // agent at the centre of cell (5,5), arrow towards +x
    CHECK(px(55, 45) == kAgentColour);
    CHECK(px(56, 45) == kAgentColour);
    CHECK(px(57, 45) == kAgentColour);
    CHECK_FALSE(px(55, 44) == kAgentColour);

    def.palette.erase(ids::log);
    CHECK_THROWS_AS(render_screen(initial_state(def), def.palette, 10, 10), RenderError);
}

TEST_CASE("PNG and BMP are lossless") {
    Scene sc;
    auto frame = render_screen(sc.s, sc.def.palette, 173, 91);
    for (const auto& f : {frame, noise_frame(31, 17, 4)}) {
        auto png = encode_frame(f, ImageFormat::Png);
        CHECK(decode_png(png) == f);
        CHECK(png == encode_frame(f, ImageFormat::Png));
        auto bmp = encode_frame(f, ImageFormat::Bmp);
        CHECK(decode_bmp(bmp) == f);
        CHECK(bmp == encode_frame(f, ImageFormat::Bmp));
    }
}

TEST_CASE("JPEG stays above the PSNR floor") {
    Scene sc;
    auto frame = render_screen(sc.s, sc.def.palette, 320, 240);
    for (auto fmt : {ImageFormat::Jpeg, ImageFormat::Jpg}) {
        auto back = decode_jpeg(encode_frame(frame, fmt, 75));
        REQUIRE(back.width == 320);
        REQUIRE(back.height == 240);
        CHECK(psnr(frame, back) >= 30.0);
    }
}

TEST_CASE("WBMP thresholds luminance at 128") {
    ScreenFrame black{9, 3, Bytes(9 * 3 * 3, 0)};
    int w = 0, h = 0;
    auto bits = decode_wbmp(encode_frame(black, ImageFormat::Wbmp), w, h);
    CHECK(w == 9);
    CHECK(h == 3);
    CHECK(std::all_of(bits.begin(), bits.end(), [](int b) { return b == 0; }));

    auto noise = noise_frame(200, 130, 9);  // width > 127 exercises multi-byte headers
    bits = decode_wbmp(encode_frame(noise, ImageFormat::Wbmp), w, h);
    REQUIRE(w == 200);
    REQUIRE(h == 130);
    for (int i = 0; i < w * h; ++i) {
        const auto* p = &noise.rgb[static_cast<std::size_t>(i) * 3];
        double y = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
        if (std::abs(y - 128) < 0.01) continue;
        REQUIRE(bits[i] == (y >= 128 ? 1 : 0));
    }
}

TEST_CASE("GIF keeps palette colours exactly") {
    Scene sc;
    for (auto [w, h] : {std::pair{320, 240}, std::pair{7, 5}, std::pair{640, 480}}) {
        auto frame = render_screen(sc.s, sc.def.palette, w, h);
        CHECK(decode_gif(encode_frame(frame, ImageFormat::Gif)) == frame);
    }
    ScreenFrame one{1, 1, {10, 20, 30}};
    CHECK(decode_gif(encode_frame(one, ImageFormat::Gif)) == one);
    // more than 256 colours falls back to 3-3-2
    auto noise = noise_frame(64, 64, 1);
    auto back = decode_gif(encode_frame(noise, ImageFormat::Gif));
    for (std::size_t i = 0; i < noise.rgb.size(); i += 3) {
        REQUIRE(std::abs(int(back.rgb[i]) - int(noise.rgb[i])) <= 37);
        REQUIRE(std::abs(int(back.rgb[i + 2]) - int(noise.rgb[i + 2])) <= 85);
    }
}

TEST_CASE("image format names") {
    for (auto [name, fmt] : std::map<std::string, ImageFormat>{{"PNG", ImageFormat::Png},
                                                               {"BMP", ImageFormat::Bmp},
                                                               {"JPEG", ImageFormat::Jpeg},
                                                               {"JPG", ImageFormat::Jpg},
                                                               {"WBMP", ImageFormat::Wbmp},
                                                               {"GIF", ImageFormat::Gif}}) {
        CHECK(parse_image_format(name) == fmt);
        CHECK(format_name(fmt) == name);
    }
    CHECK_FALSE(parse_image_format("TIFF"));
    CHECK_THROWS_AS(encode_frame(ScreenFrame{2, 2, {}}, ImageFormat::Png), std::invalid_argument);
}

TEST_CASE("base64") {
    // RFC 4648 test vectors
    const std::pair<std::string, std::string> vectors[] = {
        {"", ""}, {"f", "Zg=="}, {"fo", "Zm8="}, {"foo", "Zm9v"}, {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="},
        {"foobar", "Zm9vYmFy"}};
    for (const auto& [plain, coded] : vectors) {
        Bytes bytes(plain.begin(), plain.end());
        CHECK(base64_encode(bytes) == coded);
        CHECK(base64_decode(coded) == bytes);
    }
    auto noise = noise_frame(50, 50, 3).rgb;
    CHECK(base64_decode(base64_encode(noise)) == noise);
    CHECK_THROWS(base64_decode("Zm9v!"));
}
