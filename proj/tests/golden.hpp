#pragma once

// Frozen outputs of tests/oracle/store_oracle.py (prefix /gnu/store).
// Regenerate only when the path formulas change on purpose.

namespace golden {

inline constexpr const char* kGreetingPath = "/gnu/store/x11ad7abqa94gifpj4y1fihjdfy3i14m-greeting";
inline constexpr const char* kEmptyFilePath = "/gnu/store/3mky65g9mb019vc2mzcrk4gpw8jndkk0-empty";
inline constexpr const char* kGreetingBuilder = "/gnu/store/y9s0fk3ag0k1jpqv6wcpxql81m0f7b97-greeting-builder";
inline constexpr const char* kGreetingDrvPath = "/gnu/store/wc6jhzi1nc8jny60pvr424dvadc2fwnc-greeting.drv";
inline constexpr const char* kGreetingOutPath = "/gnu/store/l7kcdnwfdhza6mjd7mv17cw3csdx3ghx-greeting";
inline constexpr const char* kMultiDrvPath = "/gnu/store/qa2ca99kbp9agy0if9m64zjbm84llg83-multi.drv";
inline constexpr const char* kMultiOutPath = "/gnu/store/wdg48sa4l6jcskqz57xvcvrxqj4xzfb5-multi";
inline constexpr const char* kMultiLibPath = "/gnu/store/nlx060p77svkicsl9y1zw0bwmgf2c9bf-multi-lib";
inline constexpr const char* kChainBClosurePath = "/gnu/store/njdlb3xmai5xkbwgwwc5md5jw878l4gl-module-import";
inline constexpr const char* kImagePngPath = "/gnu/store/1xbyb1vkkas312cqqzs1m7fjmavvjgrm-image.png";

}  // namespace golden
