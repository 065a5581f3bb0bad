// Replays a generated selector header over a recorded prediction grid.
//
// The selector is baked in at compile time: SELECTOR_HEADER is the quoted
// path of the generated header and SELECTOR_SYMBOL the function it defines.
// The only runtime input is the prediction CSV written alongside the header.
// No selection logic lives here; rows are compared field by field against
// what the compiled function returns.
//
// Exit codes: 0 every row matches, 1 first mismatch (printed), 2 unusable
// input (missing file, bad header, malformed row).

#include <cerrno>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#ifndef SELECTOR_HEADER
#error "define SELECTOR_HEADER as the quoted path of the generated header"
#endif
#include SELECTOR_HEADER

#ifndef SELECTOR_SYMBOL
#define SELECTOR_SYMBOL select_kernel
#endif

#define PASTE2(a, b) a##b
#define PASTE(a, b) PASTE2(a, b)
using SelectorConfig = PASTE(SELECTOR_SYMBOL, _config);

namespace {

const char kHeader[] = "m,k,n,acc,row_tile,col_tile,wg_rows,wg_cols";

void split_fields(const std::string& line, std::vector<std::string>& out) {
    out.clear();
    std::string::size_type start = 0;
    for (;;) {
        std::string::size_type comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            return;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

bool parse_positive(const std::string& text, int64_t* value) {
    if (text.empty()) return false;
    errno = 0;
    char* end = nullptr;
    long long parsed = std::strtoll(text.c_str(), &end, 10);
    if (errno != 0 || end != text.c_str() + text.size() || parsed < 1) return false;
    *value = static_cast<int64_t>(parsed);
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: %s <predictions.csv>\n", argv[0]);
        return 2;
    }
    std::ifstream input(argv[1]);
    if (!input) {
        std::fprintf(stderr, "cannot open %s\n", argv[1]);
        return 2;
    }
    std::string line;
    if (!std::getline(input, line) || line != kHeader) {
        std::fprintf(stderr, "line 1: expected header %s\n", kHeader);
        return 2;
    }
    std::vector<std::string> fields;
    long rows = 0;
    for (long line_no = 2; std::getline(input, line); ++line_no) {
        split_fields(line, fields);
        if (fields.size() != 8) {
            std::fprintf(stderr, "line %ld: expected 8 fields, got %zu\n",
                         line_no, fields.size());
            return 2;
        }
        int64_t v[8];
        for (int i = 0; i < 8; ++i) {
            if (!parse_positive(fields[i], &v[i])) {
                std::fprintf(stderr, "line %ld: bad field '%s'\n",
                             line_no, fields[i].c_str());
                return 2;
            }
        }
        SelectorConfig got = SELECTOR_SYMBOL(v[0], v[1], v[2]);
        const int64_t actual[5] = {
            static_cast<int64_t>(got.acc), static_cast<int64_t>(got.row_tile),
            static_cast<int64_t>(got.col_tile), static_cast<int64_t>(got.wg_rows),
            static_cast<int64_t>(got.wg_cols),
        };
        for (int i = 0; i < 5; ++i) {
            if (actual[i] != v[3 + i]) {
                std::printf("mismatch at m=%" PRId64 " k=%" PRId64 " n=%" PRId64
                            ": expected %" PRId64 ",%" PRId64 ",%" PRId64
                            ",%" PRId64 ",%" PRId64
                            " got %" PRId64 ",%" PRId64 ",%" PRId64
                            ",%" PRId64 ",%" PRId64 "\n",
                            v[0], v[1], v[2],
                            v[3], v[4], v[5], v[6], v[7],
                            actual[0], actual[1], actual[2], actual[3], actual[4]);
                return 1;
            }
        }
        ++rows;
    }
    if (rows == 0) {
        std::fprintf(stderr, "no data rows\n");
        return 2;
    }
    std::printf("ok: %ld rows match\n", rows);
    return 0;
}
