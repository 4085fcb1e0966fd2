/*
 * Generic golden-vector driver for generated transport-layer codecs.
 *
 * Compiled once per device against the generated translation unit:
 *
 *   cc -std=c99 -I <gendir> \
 *      -DICDTL_HEADER='"<dev>_tl.h"' \
 *      -DICDTL_TABLE=icdtl_<dev>_frames -DICDTL_COUNT=icdtl_<dev>_frame_count \
 *      runner.c <gendir>/<dev>_tl.c -o runner
 *
 * Modes:
 *   runner encode <vector-file>   one lowercase hex line per vector
 *   runner decode <vector-file>   one "path=value;..." line per vector,
 *                                 or "!idmismatch" when decode rejects the ID
 *
 * Exit codes: 0 ok, 2 usage, 3 protocol error (unknown frame/leaf, bad file).
 */

#include <stdint.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include ICDTL_HEADER

#define MAX_LINE 65536
#define MAX_STRUCT 4096
#define MAX_WIRE 2048

static char g_line[MAX_LINE];
static unsigned char g_value[MAX_STRUCT];
static uint8_t g_wire[MAX_WIRE];

static void die(const char *message)
{
    fprintf(stderr, "runner: %s\n", message);
    exit(3);
}

static const icdtl_frame_desc *find_frame(const char *name)
{
    unsigned i;
    for (i = 0; i < ICDTL_COUNT; i++) {
        if (strcmp(ICDTL_TABLE[i].name, name) == 0) {
            return &ICDTL_TABLE[i];
        }
    }
    return NULL;
}

static const icdtl_leaf_desc *find_leaf(const icdtl_frame_desc *frame, const char *path)
{
    unsigned i;
    for (i = 0; i < frame->leaf_count; i++) {
        if (strcmp(frame->leaves[i].path, path) == 0) {
            return &frame->leaves[i];
        }
    }
    return NULL;
}

static void store_unsigned(const icdtl_leaf_desc *leaf, unsigned long long value)
{
    uint8_t v8;
    uint16_t v16;
    uint32_t v32;
    uint64_t v64;
    switch (leaf->size) {
    case 1: v8 = (uint8_t)value; memcpy(g_value + leaf->offset, &v8, 1); break;
    case 2: v16 = (uint16_t)value; memcpy(g_value + leaf->offset, &v16, 2); break;
    case 4: v32 = (uint32_t)value; memcpy(g_value + leaf->offset, &v32, 4); break;
    case 8: v64 = (uint64_t)value; memcpy(g_value + leaf->offset, &v64, 8); break;
    default: die("unsupported unsigned field size");
    }
}

static void store_signed(const icdtl_leaf_desc *leaf, long long value)
{
    int8_t v8;
    int16_t v16;
    int32_t v32;
    int64_t v64;
    switch (leaf->size) {
    case 1: v8 = (int8_t)value; memcpy(g_value + leaf->offset, &v8, 1); break;
    case 2: v16 = (int16_t)value; memcpy(g_value + leaf->offset, &v16, 2); break;
    case 4: v32 = (int32_t)value; memcpy(g_value + leaf->offset, &v32, 4); break;
    case 8: v64 = (int64_t)value; memcpy(g_value + leaf->offset, &v64, 8); break;
    default: die("unsupported signed field size");
    }
}

static void set_leaf(const icdtl_leaf_desc *leaf, const char *text)
{
    if (leaf->kind == 0u) {
        unsigned char flag = (unsigned char)(strtoul(text, NULL, 10) != 0);
        memcpy(g_value + leaf->offset, &flag, 1);
    } else if (leaf->kind == 1u) {
        store_unsigned(leaf, strtoull(text, NULL, 10));
    } else if (leaf->kind == 2u) {
        store_signed(leaf, strtoll(text, NULL, 10));
    } else if (leaf->kind == 3u) {
        float f = (float)strtod(text, NULL);
        memcpy(g_value + leaf->offset, &f, sizeof f);
    } else { /* 4 float64, 5 scaled double */
        double d = strtod(text, NULL);
        memcpy(g_value + leaf->offset, &d, sizeof d);
    }
}

static void print_leaf(const icdtl_frame_desc *frame, unsigned index)
{
    const icdtl_leaf_desc *leaf = &frame->leaves[index];
    printf("%s%s=", index == 0 ? "" : ";", leaf->path);
    if (leaf->kind == 0u) {
        unsigned char flag;
        memcpy(&flag, g_value + leaf->offset, 1);
        printf("%u", flag ? 1u : 0u);
    } else if (leaf->kind == 1u) {
        unsigned long long value = 0;
        uint8_t v8; uint16_t v16; uint32_t v32; uint64_t v64;
        switch (leaf->size) {
        case 1: memcpy(&v8, g_value + leaf->offset, 1); value = v8; break;
        case 2: memcpy(&v16, g_value + leaf->offset, 2); value = v16; break;
        case 4: memcpy(&v32, g_value + leaf->offset, 4); value = v32; break;
        case 8: memcpy(&v64, g_value + leaf->offset, 8); value = v64; break;
        default: die("unsupported unsigned field size");
        }
        printf("%llu", value);
    } else if (leaf->kind == 2u) {
        long long value = 0;
        int8_t v8; int16_t v16; int32_t v32; int64_t v64;
        switch (leaf->size) {
        case 1: memcpy(&v8, g_value + leaf->offset, 1); value = v8; break;
        case 2: memcpy(&v16, g_value + leaf->offset, 2); value = v16; break;
        case 4: memcpy(&v32, g_value + leaf->offset, 4); value = v32; break;
        case 8: memcpy(&v64, g_value + leaf->offset, 8); value = v64; break;
        default: die("unsupported signed field size");
        }
        printf("%lld", value);
    } else if (leaf->kind == 3u) {
        float f;
        memcpy(&f, g_value + leaf->offset, sizeof f);
        printf("%.17g", (double)f);
    } else {
        double d;
        memcpy(&d, g_value + leaf->offset, sizeof d);
        printf("%.17g", d);
    }
}

static int hex_nibble(char c)
{
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

static unsigned parse_hex(const char *text, uint8_t *out, unsigned max)
{
    unsigned count = 0;
    while (text[0] && text[0] != '\n' && text[0] != '\r') {
        int hi = hex_nibble(text[0]);
        int lo = hex_nibble(text[1]);
        if (hi < 0 || lo < 0 || count >= max) {
            die("malformed hex payload");
        }
        out[count++] = (uint8_t)((hi << 4) | lo);
        text += 2;
    }
    return count;
}

static void chomp(char *line)
{
    size_t len = strlen(line);
    while (len > 0 && (line[len - 1] == '\n' || line[len - 1] == '\r')) {
        line[--len] = '\0';
    }
}

int main(int argc, char **argv)
{
    const icdtl_frame_desc *frame;
    FILE *file;
    char frame_name[256];
    int encode_mode;

    if (argc != 3 || (strcmp(argv[1], "encode") != 0 && strcmp(argv[1], "decode") != 0)) {
        fprintf(stderr, "usage: runner encode|decode <vector-file>\n");
        return 2;
    }
    encode_mode = strcmp(argv[1], "encode") == 0;
    file = fopen(argv[2], "r");
    if (file == NULL) {
        fprintf(stderr, "runner: cannot open %s\n", argv[2]);
        return 2;
    }
    if (fgets(g_line, MAX_LINE, file) == NULL || strncmp(g_line, "#frame ", 7) != 0) {
        die("vector file must start with a '#frame' header");
    }
    {
        const char *slash = strchr(g_line + 7, '/');
        const char *end;
        size_t len;
        if (slash == NULL) {
            die("malformed '#frame' header");
        }
        end = strchr(slash, ' ');
        if (end == NULL) {
            die("malformed '#frame' header");
        }
        len = (size_t)(end - slash - 1);
        if (len >= sizeof frame_name) {
            die("frame name too long");
        }
        memcpy(frame_name, slash + 1, len);
        frame_name[len] = '\0';
    }
    frame = find_frame(frame_name);
    if (frame == NULL) {
        die("frame not present in the generated table");
    }
    if (frame->struct_size > MAX_STRUCT || frame->size_bytes > MAX_WIRE) {
        die("frame exceeds static buffers");
    }

    while (fgets(g_line, MAX_LINE, file) != NULL) {
        char *sep;
        chomp(g_line);
        if (g_line[0] == '\0' || g_line[0] == '#') {
            continue;
        }
        sep = strstr(g_line, " | ");
        if (sep == NULL) {
            die("malformed vector line");
        }
        *sep = '\0';
        if (encode_mode) {
            char *cursor = g_line;
            unsigned i;
            memset(g_value, 0, frame->struct_size);
            while (cursor != NULL && cursor[0] != '\0') {
                char *next = strchr(cursor, ';');
                char *eq;
                const icdtl_leaf_desc *leaf;
                if (next != NULL) {
                    *next = '\0';
                    next += 1;
                }
                eq = strchr(cursor, '=');
                if (eq == NULL) {
                    die("malformed value pair");
                }
                *eq = '\0';
                leaf = find_leaf(frame, cursor);
                if (leaf == NULL) {
                    die("value path not present in the generated table");
                }
                set_leaf(leaf, eq + 1);
                cursor = next;
            }
            frame->encode(g_value, g_wire);
            for (i = 0; i < frame->size_bytes; i++) {
                printf("%02x", g_wire[i]);
            }
            printf("\n");
        } else {
            unsigned got = parse_hex(sep + 3, g_wire, MAX_WIRE);
            unsigned i;
            if (got != frame->size_bytes) {
                die("hex payload length does not match the frame");
            }
            memset(g_value, 0, frame->struct_size);
            if (frame->decode(g_wire, g_value) != 0) {
                printf("!idmismatch\n");
                continue;
            }
            for (i = 0; i < frame->leaf_count; i++) {
                print_leaf(frame, i);
            }
            printf("\n");
        }
    }
    fclose(file);
    return 0;
}
