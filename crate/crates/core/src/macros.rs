/// Declares a one-byte wire enumeration with its fixed numeric codes
/// and camelCase wire names.
macro_rules! wire_enum {
    (
        $(#[$meta:meta])*
        $vis:vis enum $name:ident {
            $( $(#[$vmeta:meta])* $variant:ident = $value:literal => $wire:literal ),+ $(,)?
        }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        #[repr(u8)]
        $vis enum $name {
            $( $(#[$vmeta])* $variant = $value ),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn code(self) -> u8 {
                self as u8
            }

            pub fn from_code(code: u8) -> Option<Self> {
                match code {
                    $( $value => Some($name::$variant), )+
                    _ => None,
                }
            }

            pub fn name(self) -> &'static str {
                match self {
                    $( $name::$variant => $wire, )+
                }
            }

            pub fn from_name(name: &str) -> Option<Self> {
                match name {
                    $( $wire => Some($name::$variant), )+
                    _ => None,
                }
            }
        }

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                write!(f, "{}({})", self.name(), self.code())
            }
        }

        impl $crate::tlv::FieldValue for $name {
            fn put(&self, out: &mut Vec<u8>) {
                out.push(self.code());
            }

            fn get(bytes: &[u8]) -> $crate::tlv::Result<Self> {
                match bytes {
                    [code] => $name::from_code(*code)
                        .ok_or($crate::tlv::CodecError::InvalidValue(stringify!($name))),
                    _ => Err($crate::tlv::CodecError::InvalidValue(stringify!($name))),
                }
            }
        }

        impl serde::Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> ::std::result::Result<S::Ok, S::Error> {
                s.serialize_str(self.name())
            }
        }

        impl<'de> serde::Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> ::std::result::Result<Self, D::Error> {
                let name = <std::borrow::Cow<'de, str>>::deserialize(d)?;
                $name::from_name(&name).ok_or_else(|| {
                    serde::de::Error::custom(format!(
                        concat!("unknown ", stringify!($name), " `{}`"),
                        name
                    ))
                })
            }
        }
    };
}

/// Declares a fixed-length octet newtype. JSON form is base64 unless a
/// custom serde impl is supplied by the caller.
macro_rules! octets {
    ($(#[$meta:meta])* $vis:vis struct $name:ident([u8; $len:literal]);) => {
        $(#[$meta])*
        #[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        $vis struct $name(pub [u8; $len]);

        impl $name {
            pub const LEN: usize = $len;

            pub fn as_bytes(&self) -> &[u8; $len] {
                &self.0
            }

            pub fn from_slice(bytes: &[u8]) -> Option<Self> {
                bytes.try_into().ok().map($name)
            }
        }

        impl From<[u8; $len]> for $name {
            fn from(bytes: [u8; $len]) -> Self {
                $name(bytes)
            }
        }

        impl std::fmt::Debug for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                write!(f, "{}({})", stringify!($name), hex::encode_upper(self.0))
            }
        }

        impl $crate::tlv::FieldValue for $name {
            fn put(&self, out: &mut Vec<u8>) {
                out.extend_from_slice(&self.0);
            }

            fn get(bytes: &[u8]) -> $crate::tlv::Result<Self> {
                $name::from_slice(bytes)
                    .ok_or($crate::tlv::CodecError::InvalidValue(stringify!($name)))
            }
        }
    };
}

/// Declares a struct with a TLV layout. Each field is `index kind name: Type`
/// where kind is `req`, `opt` (Type is an `Option`) or `flag` (Type is `bool`).
macro_rules! tlv_struct {
    (@write req $w:ident $idx:literal $v:expr) => { $w.field($idx, &$v) };
    (@write opt $w:ident $idx:literal $v:expr) => { $w.opt($idx, &$v) };
    (@write flag $w:ident $idx:literal $v:expr) => { $w.flag($idx, $v) };
    (@read req $f:ident $idx:literal) => { $f.req($idx)? };
    (@read opt $f:ident $idx:literal) => { $f.opt($idx)? };
    (@read flag $f:ident $idx:literal) => { $f.flag($idx)? };
    (
        $(#[$meta:meta])*
        $vis:vis struct $name:ident : $tag:literal {
            $( $(#[$fmeta:meta])* $idx:literal $kind:ident $field:ident : $ty:ty ),* $(,)?
        }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq)]
        $vis struct $name {
            $( $(#[$fmeta])* pub $field: $ty, )*
        }

        impl $crate::tlv::TlvCodec for $name {
            const TAG: u8 = $tag;

            #[allow(unused_variables)]
            fn write_fields(&self, w: &mut $crate::tlv::TlvWriter) {
                $( tlv_struct!(@write $kind w $idx self.$field); )*
            }

            #[allow(unused_variables)]
            fn read_fields(f: &mut $crate::tlv::Fields<'_>) -> $crate::tlv::Result<Self> {
                Ok(Self { $( $field: tlv_struct!(@read $kind f $idx), )* })
            }
        }
    };
}

/// Declares an enum encoded as exactly one alternative field.
macro_rules! tlv_choice {
    (
        $(#[$meta:meta])*
        $vis:vis enum $name:ident : $tag:literal {
            $( $(#[$vmeta:meta])* $idx:literal $variant:ident ( $ty:ty ) ),+ $(,)?
        }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq)]
        $vis enum $name {
            $( $(#[$vmeta])* $variant($ty), )+
        }

        impl $crate::tlv::TlvCodec for $name {
            const TAG: u8 = $tag;

            fn write_fields(&self, w: &mut $crate::tlv::TlvWriter) {
                match self {
                    $( $name::$variant(v) => w.field($idx, v), )+
                }
            }

            fn read_fields(f: &mut $crate::tlv::Fields<'_>) -> $crate::tlv::Result<Self> {
                let (idx, content) = f.choice()?;
                match idx {
                    $( $idx => Ok($name::$variant(<$ty as $crate::tlv::FieldValue>::get(content)?)), )+
                    other => Err($crate::tlv::CodecError::UnknownTag($crate::tlv::FIELD_TAG | other)),
                }
            }
        }
    };
}

/// Declares a one-byte flag set. Unknown bits are rejected on decode; the
/// JSON form is the list of set flag names.
macro_rules! bitset {
    (
        $(#[$meta:meta])*
        $vis:vis struct $name:ident {
            $( $flag:ident = $bit:literal => $wire:literal ),+ $(,)?
        }
    ) => {
        $(#[$meta])*
        #[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
        $vis struct $name(u8);

        impl $name {
            $( pub const $flag: $name = $name($bit); )+
            const NAMES: &'static [(u8, &'static str)] = &[$(($bit, $wire)),+];
            const MASK: u8 = 0 $(| $bit)+;

            pub const fn empty() -> Self {
                $name(0)
            }

            pub fn from_bits(bits: u8) -> Option<Self> {
                (bits & !Self::MASK == 0).then_some($name(bits))
            }

            pub fn bits(self) -> u8 {
                self.0
            }

            pub fn contains(self, other: Self) -> bool {
                self.0 & other.0 == other.0
            }

            pub fn is_empty(self) -> bool {
                self.0 == 0
            }

            pub fn with(self, other: Self) -> Self {
                $name(self.0 | other.0)
            }

            pub fn names(self) -> Vec<&'static str> {
                Self::NAMES
                    .iter()
                    .filter(|(bit, _)| self.0 & bit != 0)
                    .map(|(_, n)| *n)
                    .collect()
            }

            pub fn from_names<'a>(names: impl IntoIterator<Item = &'a str>) -> Option<Self> {
                let mut bits = 0;
                for name in names {
                    bits |= Self::NAMES.iter().find(|(_, n)| *n == name)?.0;
                }
                Some($name(bits))
            }
        }

        impl std::ops::BitOr for $name {
            type Output = $name;

            fn bitor(self, rhs: $name) -> $name {
                self.with(rhs)
            }
        }

        impl std::fmt::Debug for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                write!(f, "{}{:?}", stringify!($name), self.names())
            }
        }

        impl $crate::tlv::FieldValue for $name {
            fn put(&self, out: &mut Vec<u8>) {
                out.push(self.0);
            }

            fn get(bytes: &[u8]) -> $crate::tlv::Result<Self> {
                match bytes {
                    [b] => $name::from_bits(*b)
                        .ok_or($crate::tlv::CodecError::InvalidValue(stringify!($name))),
                    _ => Err($crate::tlv::CodecError::InvalidValue(stringify!($name))),
                }
            }
        }

        impl serde::Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> ::std::result::Result<S::Ok, S::Error> {
                serde::Serialize::serialize(&self.names(), s)
            }
        }

        impl<'de> serde::Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> ::std::result::Result<Self, D::Error> {
                let names = <Vec<String>>::deserialize(d)?;
                $name::from_names(names.iter().map(String::as_str))
                    .ok_or_else(|| serde::de::Error::custom(concat!("unknown ", stringify!($name), " flag")))
            }
        }
    };
}
